//! Dataset ingestion and design matrices for the five nested predictors of
//! the cotton defoliation experiment layout.
//!
//! Input CSV has header `count,def,stage,rep`. Defoliation may be given in
//! percent (0–100) or proportion (0–1); values above 1 are divided by 100.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use serde::Serialize;
use std::fmt;
use std::io::BufRead;
use std::path::Path;

/// The five growth stages, in the order coefficients are reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Vegetative,
    Bud,
    Blossom,
    Fig,
    Boll,
}

pub const STAGES: [Stage; 5] = [
    Stage::Vegetative,
    Stage::Bud,
    Stage::Blossom,
    Stage::Fig,
    Stage::Boll,
];

impl Stage {
    pub fn parse(s: &str) -> Option<Stage> {
        match s.trim().to_ascii_lowercase().as_str() {
            "vegetative" => Some(Stage::Vegetative),
            "bud" | "flower-bud" | "flower_bud" | "flowerbud" => Some(Stage::Bud),
            "blossom" => Some(Stage::Blossom),
            "fig" => Some(Stage::Fig),
            "boll" | "cotton-boll" | "cotton_boll" | "cottonboll" => Some(Stage::Boll),
            _ => None,
        }
    }

    pub fn index(&self) -> usize {
        STAGES.iter().position(|s| s == self).unwrap()
    }

    pub fn name(&self) -> &'static str {
        match self {
            Stage::Vegetative => "vegetative",
            Stage::Bud => "bud",
            Stage::Blossom => "blossom",
            Stage::Fig => "fig",
            Stage::Boll => "boll",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Observation {
    pub count: u64,
    pub defoliation: f64,
    pub stage: Stage,
    pub replicate: i64,
}

/// Observed counts with their covariates, in input order.
#[derive(Debug, Clone, Default)]
pub struct CountDataset {
    pub rows: Vec<Observation>,
}

impl CountDataset {
    pub fn counts(&self) -> Vec<u64> {
        self.rows.iter().map(|r| r.count).collect()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Parse the `count,def,stage,rep` CSV format from any reader.
pub fn parse_csv<R: BufRead>(reader: R) -> Result<CountDataset> {
    let mut rows = Vec::new();
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse { line: 1, message: "empty input".into() })?;
    let header = header?;
    let cols: Vec<String> = header.split(',').map(|c| c.trim().to_ascii_lowercase()).collect();
    if cols != ["count", "def", "stage", "rep"] {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `count,def,stage,rep`, got `{header}`"),
        });
    }

    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        let count: u64 = fields[0].trim().parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("count must be a non-negative integer, got `{}`", fields[0].trim()),
        })?;
        let mut def: f64 = fields[1].trim().parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("def must be numeric, got `{}`", fields[1].trim()),
        })?;
        if def > 1.0 {
            def /= 100.0;
        }
        if !(0.0..=1.0).contains(&def) {
            return Err(Error::Parse {
                line: line_no,
                message: format!("def out of range after normalization: {def}"),
            });
        }
        let stage = Stage::parse(fields[2]).ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("unknown stage label `{}`", fields[2].trim()),
        })?;
        let replicate: i64 = fields[3].trim().parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("rep must be an integer, got `{}`", fields[3].trim()),
        })?;
        rows.push(Observation { count, defoliation: def, stage, replicate });
    }
    Ok(CountDataset { rows })
}

pub fn parse_csv_file(path: &Path) -> Result<CountDataset> {
    let file = std::fs::File::open(path)?;
    parse_csv(std::io::BufReader::new(file))
}

/// Numeric model matrix with coefficient names for one of the five
/// predictors. The intercept is always the first column and never
/// interacts with stage.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub matrix: DMatrix<f64>,
    pub names: Vec<String>,
    pub predictor_id: u8,
}

impl DesignMatrix {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn p(&self) -> usize {
        self.matrix.ncols()
    }
}

/// Build one design row from (def, stage) for a given predictor.
pub fn design_row(def: f64, stage: Stage, predictor_id: u8) -> Result<Vec<f64>> {
    let j = stage.index();
    let row = match predictor_id {
        1 => vec![1.0],
        2 => vec![1.0, def],
        3 => vec![1.0, def, def * def],
        4 => {
            // intercept, def per stage, shared def²
            let mut r = vec![0.0; 7];
            r[0] = 1.0;
            r[1 + j] = def;
            r[6] = def * def;
            r
        }
        5 => {
            // intercept, def per stage, def² per stage
            let mut r = vec![0.0; 11];
            r[0] = 1.0;
            r[1 + j] = def;
            r[6 + j] = def * def;
            r
        }
        other => return Err(Error::domain(format!("predictor id must be 1..=5, got {other}"))),
    };
    Ok(row)
}

/// Coefficient names for a predictor, matching the reporting order of the
/// stages.
pub fn coefficient_names(predictor_id: u8) -> Result<Vec<String>> {
    let names = match predictor_id {
        1 => vec!["gamma0".to_string()],
        2 => vec!["gamma0".into(), "gamma1".into()],
        3 => vec!["gamma0".into(), "gamma1".into(), "gamma2".into()],
        4 => {
            let mut n = vec!["gamma0".to_string()];
            n.extend(STAGES.iter().map(|s| format!("gamma1_{s}")));
            n.push("gamma2".into());
            n
        }
        5 => {
            let mut n = vec!["gamma0".to_string()];
            n.extend(STAGES.iter().map(|s| format!("gamma1_{s}")));
            n.extend(STAGES.iter().map(|s| format!("gamma2_{s}")));
            n
        }
        other => return Err(Error::domain(format!("predictor id must be 1..=5, got {other}"))),
    };
    Ok(names)
}

/// Build the full design matrix for a predictor.
pub fn build_design(data: &CountDataset, predictor_id: u8) -> Result<DesignMatrix> {
    if data.is_empty() {
        return Err(Error::domain("dataset is empty"));
    }
    let names = coefficient_names(predictor_id)?;
    let p = names.len();
    let n = data.len();
    let mut matrix = DMatrix::zeros(n, p);
    for (i, obs) in data.rows.iter().enumerate() {
        let row = design_row(obs.defoliation, obs.stage, predictor_id)?;
        for (k, v) in row.into_iter().enumerate() {
            matrix[(i, k)] = v;
        }
    }
    Ok(DesignMatrix { matrix, names, predictor_id })
}
