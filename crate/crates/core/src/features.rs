//! The twelve spatio-semantic features of a CIU walk.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{QuadrantGraph, SpatioSemanticGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    AvgX,
    StdX,
    AvgY,
    StdY,
    TotalPath,
    UniqueNodes,
    PathPerUnique,
    Nodes,
    SelfCycles,
    Cycles,
    SelfCyclesQuad,
    CrossRatioQuad,
}

impl Feature {
    /// Column order of the feature CSV.
    pub const COLUMNS: [Feature; 12] = [
        Feature::AvgX,
        Feature::StdX,
        Feature::AvgY,
        Feature::StdY,
        Feature::TotalPath,
        Feature::UniqueNodes,
        Feature::PathPerUnique,
        Feature::Nodes,
        Feature::SelfCycles,
        Feature::Cycles,
        Feature::SelfCyclesQuad,
        Feature::CrossRatioQuad,
    ];

    /// Row order of the group-comparison table.
    pub const TABLE_ORDER: [Feature; 12] = [
        Feature::AvgX,
        Feature::StdX,
        Feature::AvgY,
        Feature::StdY,
        Feature::TotalPath,
        Feature::PathPerUnique,
        Feature::SelfCycles,
        Feature::Cycles,
        Feature::Nodes,
        Feature::SelfCyclesQuad,
        Feature::CrossRatioQuad,
        Feature::UniqueNodes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::AvgX => "avg_x",
            Feature::StdX => "std_x",
            Feature::AvgY => "avg_y",
            Feature::StdY => "std_y",
            Feature::TotalPath => "total_path",
            Feature::UniqueNodes => "unique_nodes",
            Feature::PathPerUnique => "path_per_unique",
            Feature::Nodes => "nodes",
            Feature::SelfCycles => "self_cycles",
            Feature::Cycles => "cycles",
            Feature::SelfCyclesQuad => "self_cycles_quad",
            Feature::CrossRatioQuad => "cross_ratio_quad",
        }
    }

    pub fn is_count(self) -> bool {
        matches!(
            self,
            Feature::UniqueNodes | Feature::Nodes | Feature::SelfCycles | Feature::Cycles | Feature::SelfCyclesQuad
        )
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Feature::COLUMNS
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::schema(format!("unknown feature {s:?}")))
    }
}

/// Features of one transcript. `None` marks an undefined value: everything
/// but `nodes` for an empty walk, the cross ratio when no edge stays within
/// a quadrant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub transcript_id: String,
    pub avg_x: Option<f64>,
    pub std_x: Option<f64>,
    pub avg_y: Option<f64>,
    pub std_y: Option<f64>,
    pub total_path: Option<f64>,
    pub unique_nodes: Option<u32>,
    pub path_per_unique: Option<f64>,
    pub nodes: u32,
    pub self_cycles: Option<u32>,
    pub cycles: Option<u32>,
    pub self_cycles_quad: Option<u32>,
    pub cross_ratio_quad: Option<f64>,
}

impl FeatureVector {
    pub fn empty(transcript_id: &str) -> Self {
        FeatureVector {
            transcript_id: transcript_id.to_string(),
            avg_x: None,
            std_x: None,
            avg_y: None,
            std_y: None,
            total_path: None,
            unique_nodes: None,
            path_per_unique: None,
            nodes: 0,
            self_cycles: None,
            cycles: None,
            self_cycles_quad: None,
            cross_ratio_quad: None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes == 0
    }

    pub fn get(&self, feature: Feature) -> Option<f64> {
        let count = |v: Option<u32>| v.map(f64::from);
        match feature {
            Feature::AvgX => self.avg_x,
            Feature::StdX => self.std_x,
            Feature::AvgY => self.avg_y,
            Feature::StdY => self.std_y,
            Feature::TotalPath => self.total_path,
            Feature::UniqueNodes => count(self.unique_nodes),
            Feature::PathPerUnique => self.path_per_unique,
            Feature::Nodes => Some(f64::from(self.nodes)),
            Feature::SelfCycles => count(self.self_cycles),
            Feature::Cycles => count(self.cycles),
            Feature::SelfCyclesQuad => count(self.self_cycles_quad),
            Feature::CrossRatioQuad => self.cross_ratio_quad,
        }
    }

    fn set(&mut self, feature: Feature, value: Option<f64>) -> Result<()> {
        let count = |v: Option<f64>| -> Result<Option<u32>> {
            v.map(|x| {
                if x >= 0.0 && x.fract() == 0.0 && x <= f64::from(u32::MAX) {
                    Ok(x as u32)
                } else {
                    Err(Error::schema(format!(
                        "{feature} must be a non-negative integer, got {x}"
                    )))
                }
            })
            .transpose()
        };
        match feature {
            Feature::AvgX => self.avg_x = value,
            Feature::StdX => self.std_x = value,
            Feature::AvgY => self.avg_y = value,
            Feature::StdY => self.std_y = value,
            Feature::TotalPath => self.total_path = value,
            Feature::UniqueNodes => self.unique_nodes = count(value)?,
            Feature::PathPerUnique => self.path_per_unique = value,
            Feature::Nodes => self.nodes = count(value)?.unwrap_or(0),
            Feature::SelfCycles => self.self_cycles = count(value)?,
            Feature::Cycles => self.cycles = count(value)?,
            Feature::SelfCyclesQuad => self.self_cycles_quad = count(value)?,
            Feature::CrossRatioQuad => self.cross_ratio_quad = value,
        }
        Ok(())
    }
}

fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Compute the feature vector of a walk and its quadrant graph, which must
/// come from the same CIU sequence.
pub fn compute_features(graph: &SpatioSemanticGraph, quadrants: &QuadrantGraph) -> Result<FeatureVector> {
    let seq = graph.sequence();
    if quadrants.sequence.len() != seq.len() {
        return Err(Error::Domain(format!(
            "quadrant sequence has {} entries, CIU sequence {}",
            quadrants.sequence.len(),
            seq.len()
        )));
    }
    if seq.is_empty() {
        return Ok(FeatureVector::empty(graph.transcript_id()));
    }

    let points = graph.walk_points();
    let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.y).collect();
    let (avg_x, std_x) = mean_and_std(&xs);
    let (avg_y, std_y) = mean_and_std(&ys);

    let total_path: f64 = graph.edges().iter().map(|e| e.len).sum();
    let nodes = seq.len() as u32;
    let unique_nodes = seq.iter().collect::<BTreeSet<_>>().len() as u32;
    let self_cycles = seq.windows(2).filter(|w| w[0] == w[1]).count() as u32;
    let self_cycles_quad = quadrants.edges.iter().filter(|(a, b)| a == b).count() as u32;
    let crossing = quadrants.edges.len() as u32 - self_cycles_quad;

    Ok(FeatureVector {
        transcript_id: graph.transcript_id().to_string(),
        avg_x: Some(avg_x),
        std_x: Some(std_x),
        avg_y: Some(avg_y),
        std_y: Some(std_y),
        total_path: Some(total_path),
        unique_nodes: Some(unique_nodes),
        path_per_unique: Some(total_path / f64::from(unique_nodes)),
        nodes,
        self_cycles: Some(self_cycles),
        cycles: Some(nodes - unique_nodes),
        self_cycles_quad: Some(self_cycles_quad),
        cross_ratio_quad: (self_cycles_quad > 0).then(|| f64::from(crossing) / f64::from(self_cycles_quad)),
    })
}

/// Format a real with six significant digits, trailing zeros trimmed.
pub fn format_real(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.5e}");
    let (_, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let fixed = format!("{v:.decimals$}");
        if fixed.contains('.') {
            fixed.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            fixed
        }
    } else {
        let (mantissa, _) = sci.split_once('e').expect("scientific notation");
        let mantissa = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{mantissa}e{exp}")
    }
}

fn cell(v: &FeatureVector, feature: Feature) -> String {
    match v.get(feature) {
        None => String::new(),
        Some(x) if feature.is_count() => format!("{}", x as u64),
        Some(x) => format_real(x),
    }
}

pub fn csv_header() -> Vec<&'static str> {
    std::iter::once("id")
        .chain(Feature::COLUMNS.iter().map(|f| f.name()))
        .collect()
}

/// Write rows in the order given.
pub fn write_features_csv<W: Write>(rows: &[FeatureVector], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(csv_header())?;
    for row in rows {
        let mut record = vec![row.transcript_id.clone()];
        record.extend(Feature::COLUMNS.iter().map(|&f| cell(row, f)));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Feature CSV with rows sorted by transcript id.
pub fn features_csv(rows: &[FeatureVector]) -> String {
    let mut sorted: Vec<FeatureVector> = rows.to_vec();
    sorted.sort_by(|a, b| a.transcript_id.cmp(&b.transcript_id));
    let mut buf = Vec::new();
    write_features_csv(&sorted, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("CSV is UTF-8")
}

pub fn read_features_csv<R: Read>(input: R) -> Result<Vec<FeatureVector>> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    let id_col = headers
        .iter()
        .position(|h| h == "id")
        .ok_or_else(|| Error::schema("feature CSV has no id column"))?;
    let mut columns = Vec::new();
    for feature in Feature::COLUMNS {
        let pos = headers
            .iter()
            .position(|h| h == feature.name())
            .ok_or_else(|| Error::schema(format!("feature CSV has no {feature} column")))?;
        columns.push((feature, pos));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let mut row = FeatureVector::empty(&record[id_col]);
        for &(feature, pos) in &columns {
            let text = record.get(pos).unwrap_or("").trim();
            let value =
                if text.is_empty() {
                    None
                } else {
                    Some(text.parse::<f64>().map_err(|_| {
                        Error::schema(format!("row {:?}: bad {feature} value {text:?}", row.transcript_id))
                    })?)
                };
            row.set(feature, value)?;
        }
        rows.push(row);
    }
    Ok(rows)
}
