//! Per-feature ANCOVA: partial F for the group factor adjusted for age,
//! education, gender and unique node count, plus estimated marginal means.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dist::{f_sf, t_quantile};
use super::ols::{has_full_column_rank, ols_fit};
use crate::error::{Error, Result};
use crate::features::{format_real, Feature, FeatureVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Unimpaired = 0,
    Impaired = 1,
}

impl Group {
    pub fn indicator(self) -> f64 {
        self as u8 as f64
    }

    pub fn name(self) -> &'static str {
        match self {
            Group::Unimpaired => "unimpaired",
            Group::Impaired => "impaired",
        }
    }
}

impl FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "unimpaired" | "0" => Ok(Group::Unimpaired),
            "impaired" | "1" => Ok(Group::Impaired),
            other => Err(Error::schema(format!("unknown group {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortRecord {
    pub transcript_id: String,
    pub group: Option<Group>,
    pub age: Option<f64>,
    pub education: Option<f64>,
    /// 0 or 1
    pub gender: Option<f64>,
    pub features: FeatureVector,
}

impl CohortRecord {
    /// Why the record cannot enter any model, if it cannot.
    pub fn exclusion_reason(&self) -> Option<String> {
        let mut missing = Vec::new();
        if self.group.is_none() {
            missing.push("group");
        }
        if !self.age.is_some_and(f64::is_finite) {
            missing.push("age");
        }
        if !self.education.is_some_and(f64::is_finite) {
            missing.push("education");
        }
        if !self.gender.is_some_and(f64::is_finite) {
            missing.push("gender");
        }
        (!missing.is_empty()).then(|| format!("{}: missing {}", self.transcript_id, missing.join(", ")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AncovaResult {
    pub feature: Feature,
    pub f_value: f64,
    pub p_value: f64,
    pub df_numerator: usize,
    pub df_denominator: usize,
    /// Indexed by group indicator.
    pub emm: [f64; 2],
    pub ci95: [(f64, f64); 2],
    pub n_used: usize,
    pub n_per_group: [usize; 2],
    /// Design columns of the full model.
    pub columns: Vec<String>,
    pub warnings: Vec<String>,
}

pub fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

const COVARIATES: [&str; 4] = ["age", "education", "gender", "unique_nodes"];

fn covariate(record: &CohortRecord, name: &str) -> Option<f64> {
    match name {
        "age" => record.age,
        "education" => record.education,
        "gender" => record.gender,
        "unique_nodes" => record.features.get(Feature::UniqueNodes),
        _ => None,
    }
}

pub fn ancova_feature(records: &[CohortRecord], feature: Feature) -> Result<AncovaResult> {
    let mut used: Vec<&CohortRecord> = records
        .iter()
        .filter(|r| r.exclusion_reason().is_none())
        .filter(|r| r.features.get(feature).is_some_and(f64::is_finite))
        .filter(|r| feature == Feature::UniqueNodes || r.features.get(Feature::UniqueNodes).is_some())
        .collect();
    used.sort_by(|a, b| a.transcript_id.cmp(&b.transcript_id));

    let n = used.len();
    let mut n_per_group = [0usize; 2];
    for r in &used {
        n_per_group[r.group.expect("checked") as usize] += 1;
    }
    if n_per_group.iter().any(|&c| c < 2) {
        return Err(Error::InsufficientData(format!(
            "{feature}: need at least 2 records per group, have {} unimpaired and {} impaired",
            n_per_group[0], n_per_group[1]
        )));
    }

    let y: Vec<f64> = used.iter().map(|r| r.features.get(feature).expect("checked")).collect();
    let mut names = vec!["intercept".to_string(), "group".to_string()];
    let mut cols: Vec<Vec<f64>> = vec![
        vec![1.0; n],
        used.iter().map(|r| r.group.expect("checked").indicator()).collect(),
    ];
    let mut warnings = Vec::new();
    for name in COVARIATES {
        if name == "unique_nodes" && feature == Feature::UniqueNodes {
            continue;
        }
        let values: Vec<f64> = used.iter().map(|r| covariate(r, name).expect("checked")).collect();
        let mut trial = cols.clone();
        trial.push(values);
        if trial.len() < n && has_full_column_rank(&design_of(&trial)) {
            cols = trial;
            names.push(name.to_string());
        } else {
            let warning = format!("{name} dropped: constant or collinear with the other columns");
            log::warn!("{feature}: {warning}");
            warnings.push(warning);
        }
    }

    let p = cols.len();
    if n <= p {
        return Err(Error::InsufficientData(format!(
            "{feature}: {n} records for {p} parameters"
        )));
    }
    let design = design_of(&cols);
    let full = ols_fit(&design, &y, &names)?;
    let df = full.df_residual;

    let mut reduced_cols = cols.clone();
    reduced_cols.remove(1);
    let mut reduced_names = names.clone();
    reduced_names.remove(1);
    let reduced = ols_fit(&design_of(&reduced_cols), &y, &reduced_names)?;

    let mean = y.iter().sum::<f64>() / n as f64;
    let total_ss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let scale: f64 = y.iter().map(|v| v * v).sum();
    let (f_value, p_value) = if total_ss <= 1e-24 * scale {
        (0.0, 1.0)
    } else {
        let between = (reduced.residual_sum_squares - full.residual_sum_squares).max(0.0);
        if full.residual_sum_squares <= 1e-28 * total_ss {
            if between > 0.0 {
                (f64::INFINITY, 0.0)
            } else {
                (0.0, 1.0)
            }
        } else {
            let f = between / (full.residual_sum_squares / df as f64);
            (f, f_sf(f, 1.0, df as f64)?)
        }
    };

    let t_crit = t_quantile(0.975, df as f64)?;
    let means: Vec<f64> = cols.iter().map(|c| c.iter().sum::<f64>() / n as f64).collect();
    let mut emm = [0.0; 2];
    let mut ci95 = [(0.0, 0.0); 2];
    for g in [Group::Unimpaired, Group::Impaired] {
        let mut row = DVector::from_vec(means.clone());
        row[1] = g.indicator();
        let est = full.predict(&row);
        let half = t_crit * full.prediction_se(&row);
        emm[g as usize] = est;
        ci95[g as usize] = (est - half, est + half);
    }

    Ok(AncovaResult {
        feature,
        f_value,
        p_value,
        df_numerator: 1,
        df_denominator: df,
        emm,
        ci95,
        n_used: n,
        n_per_group,
        columns: names,
        warnings,
    })
}

fn design_of(cols: &[Vec<f64>]) -> DMatrix<f64> {
    let n = cols.first().map_or(0, Vec::len);
    DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AncovaRow {
    pub feature: Feature,
    pub outcome: std::result::Result<AncovaResult, String>,
}

impl AncovaRow {
    pub fn stars(&self) -> &'static str {
        self.outcome.as_ref().map_or("", |r| stars(r.p_value))
    }
}

/// One row per feature, in the order given; failures stay in their row.
pub fn ancova_table(records: &[CohortRecord], features: &[Feature]) -> Vec<AncovaRow> {
    for record in records {
        if let Some(reason) = record.exclusion_reason() {
            log::warn!("excluding {reason}");
        }
    }
    features
        .par_iter()
        .map(|&feature| AncovaRow {
            feature,
            outcome: ancova_feature(records, feature).map_err(|e| e.to_string()),
        })
        .collect()
}

pub const STATS_HEADER: [&str; 13] = [
    "feature",
    "f_value",
    "stars",
    "p_value",
    "df2",
    "n_used",
    "emm_unimpaired",
    "ci_lo_u",
    "ci_hi_u",
    "emm_impaired",
    "ci_lo_i",
    "ci_hi_i",
    "note",
];

pub fn write_ancova_csv<W: Write>(rows: &[AncovaRow], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(STATS_HEADER)?;
    for row in rows {
        let record: Vec<String> = match &row.outcome {
            Ok(r) => vec![
                row.feature.name().to_string(),
                format_real(r.f_value),
                row.stars().to_string(),
                format_real(r.p_value),
                r.df_denominator.to_string(),
                r.n_used.to_string(),
                format_real(r.emm[0]),
                format_real(r.ci95[0].0),
                format_real(r.ci95[0].1),
                format_real(r.emm[1]),
                format_real(r.ci95[1].0),
                format_real(r.ci95[1].1),
                r.warnings.join("; "),
            ],
            Err(msg) => {
                let mut cells = vec![row.feature.name().to_string()];
                cells.extend(std::iter::repeat_n(String::new(), 11));
                cells.push(msg.clone());
                cells
            }
        };
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn ancova_csv(rows: &[AncovaRow]) -> String {
    let mut buf = Vec::new();
    write_ancova_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("CSV is UTF-8")
}

/// Demographics of one transcript, as read from the metadata CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaRecord {
    pub id: String,
    pub group: Option<Group>,
    pub age: Option<f64>,
    pub education: Option<f64>,
    pub gender: Option<f64>,
}

fn optional_cell<T>(text: &str, parse: impl Fn(&str) -> Result<T>) -> Result<Option<T>> {
    let text = text.trim();
    if text.is_empty() || text.eq_ignore_ascii_case("na") {
        Ok(None)
    } else {
        parse(text).map(Some)
    }
}

fn parse_number(column: &'static str) -> impl Fn(&str) -> Result<f64> {
    move |s| {
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::schema(format!("bad {column} value {s:?}")))
    }
}

fn parse_gender(s: &str) -> Result<f64> {
    match s {
        "0" => Ok(0.0),
        "1" => Ok(1.0),
        _ => Err(Error::schema(format!("gender must be 0 or 1, got {s:?}"))),
    }
}

/// Reads `id,group,age,education_years,gender`; extra columns are ignored,
/// so a batch manifest works as well. Empty cells become missing values.
pub fn read_meta_csv<R: Read>(input: R) -> Result<Vec<MetaRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::schema(format!("metadata CSV has no {name} column")))
    };
    let (id, group, age, edu, gender) = (
        col("id")?,
        col("group")?,
        col("age")?,
        col("education_years")?,
        col("gender")?,
    );
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let cell = |i: usize| record.get(i).unwrap_or("");
        let row_id = cell(id).trim().to_string();
        if !seen.insert(row_id.clone()) {
            return Err(Error::schema(format!("duplicate id {row_id:?} in metadata")));
        }
        out.push(MetaRecord {
            group: optional_cell(cell(group), Group::from_str)?,
            age: optional_cell(cell(age), parse_number("age"))?,
            education: optional_cell(cell(edu), parse_number("education_years"))?,
            gender: optional_cell(cell(gender), parse_gender)?,
            id: row_id,
        });
    }
    Ok(out)
}

/// Pair feature rows with metadata by id. Ids present on one side only are
/// reported in the returned warnings and skipped.
pub fn join_cohort(features: &[FeatureVector], meta: &[MetaRecord]) -> (Vec<CohortRecord>, Vec<String>) {
    let by_id: BTreeMap<&str, &MetaRecord> = meta.iter().map(|m| (m.id.as_str(), m)).collect();
    let feature_ids: BTreeSet<&str> = features.iter().map(|f| f.transcript_id.as_str()).collect();
    let mut warnings = Vec::new();
    let mut records = Vec::new();
    for fv in features {
        match by_id.get(fv.transcript_id.as_str()) {
            Some(m) => records.push(CohortRecord {
                transcript_id: fv.transcript_id.clone(),
                group: m.group,
                age: m.age,
                education: m.education,
                gender: m.gender,
                features: fv.clone(),
            }),
            None => warnings.push(format!("{}: no metadata row, skipped", fv.transcript_id)),
        }
    }
    for m in meta {
        if !feature_ids.contains(m.id.as_str()) {
            warnings.push(format!("{}: no feature row, skipped", m.id));
        }
    }
    (records, warnings)
}
