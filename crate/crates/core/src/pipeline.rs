//! End-to-end pipeline over shared, read-only tables, plus run configuration
//! and batch manifests.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{compute_features, FeatureVector};
use crate::graph::{build_graph, quadrant_graph_of, SpatioSemanticGraph};
use crate::ingest::{
    decode_utf8, parse_chat, parse_plain, ChatOptions, SourceFormat, Transcript, DEFAULT_PARTICIPANT_TIER,
};
use crate::lexicon::{extract_cius, CiuSequence, ExtractOptions, Lexicon};
use crate::normalize::{normalize, LemmaRules};
use crate::spatial::CoordinateTable;
use crate::stats::Group;

pub const CONFIG_DIR_ENV: &str = "CIUGRAPH_CONFIG_DIR";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub lexicon_path: Option<PathBuf>,
    pub coords_path: Option<PathBuf>,
    pub lemma_rules_path: Option<PathBuf>,
    /// `None` detects the format per input.
    pub input_format: Option<SourceFormat>,
    pub participant_tier: String,
    pub include_low_precision: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            lexicon_path: None,
            coords_path: None,
            lemma_rules_path: None,
            input_format: None,
            participant_tier: DEFAULT_PARTICIPANT_TIER.to_string(),
            include_low_precision: false,
        }
    }
}

fn read_config(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::schema(format!("cannot read {}: {e}", path.display())))
}

impl RunConfig {
    /// Explicit path, else `$CIUGRAPH_CONFIG_DIR/<file_name>` when it
    /// exists, else the bundled default.
    fn locate(explicit: &Option<PathBuf>, file_name: &str) -> Option<PathBuf> {
        explicit.clone().or_else(|| {
            let dir = std::env::var_os(CONFIG_DIR_ENV)?;
            let candidate = Path::new(&dir).join(file_name);
            candidate.is_file().then_some(candidate)
        })
    }

    pub fn load(&self) -> Result<Pipeline> {
        let lexicon = match Self::locate(&self.lexicon_path, "lexicon.json") {
            Some(p) => Lexicon::from_json(&read_config(&p)?)?,
            None => Lexicon::default(),
        };
        let coords = match Self::locate(&self.coords_path, "coords.json") {
            Some(p) => CoordinateTable::from_json(&read_config(&p)?)?,
            None => CoordinateTable::default(),
        };
        let rules = match Self::locate(&self.lemma_rules_path, "lemma_rules.json") {
            Some(p) => LemmaRules::from_json(&read_config(&p)?)?,
            None => LemmaRules::default(),
        };
        Ok(Pipeline {
            lexicon,
            rules,
            coords,
            extract: ExtractOptions {
                include_low_precision: self.include_low_precision,
            },
            chat: ChatOptions {
                participant_tier: self.participant_tier.clone(),
            },
            input_format: self.input_format,
        })
    }
}

/// Chosen format: explicit, else `.cha` extension, else a CHAT header at
/// the top of the file, else plain text.
pub fn detect_format(explicit: Option<SourceFormat>, path: Option<&Path>, bytes: &[u8]) -> SourceFormat {
    if let Some(f) = explicit {
        return f;
    }
    if path
        .and_then(Path::extension)
        .is_some_and(|e| e.eq_ignore_ascii_case("cha"))
    {
        return SourceFormat::Chat;
    }
    let text = decode_utf8(bytes).unwrap_or("");
    let first = text.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
    if first.starts_with("@UTF8") || first.starts_with("@Begin") {
        SourceFormat::Chat
    } else {
        SourceFormat::PlainText
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    pub lexicon: Lexicon,
    pub rules: LemmaRules,
    pub coords: CoordinateTable,
    pub extract: ExtractOptions,
    pub chat: ChatOptions,
    pub input_format: Option<SourceFormat>,
}

impl Default for Pipeline {
    fn default() -> Self {
        RunConfig::default().load().expect("bundled tables are valid")
    }
}

impl Pipeline {
    pub fn parse(&self, id: &str, bytes: &[u8], path: Option<&Path>) -> Result<Transcript> {
        match detect_format(self.input_format, path, bytes) {
            SourceFormat::Chat => parse_chat(id, bytes, &self.chat),
            SourceFormat::PlainText => parse_plain(id, bytes),
        }
    }

    pub fn sequence(&self, transcript: &Transcript) -> CiuSequence {
        let tokens = normalize(transcript, &self.rules);
        extract_cius(&transcript.id, &tokens, &self.lexicon, &self.extract)
    }

    pub fn extract_bytes(&self, id: &str, bytes: &[u8], path: Option<&Path>) -> Result<CiuSequence> {
        Ok(self.sequence(&self.parse(id, bytes, path)?))
    }

    pub fn graph(&self, seq: &CiuSequence) -> Result<SpatioSemanticGraph> {
        build_graph(seq, &self.coords)
    }

    pub fn features(&self, seq: &CiuSequence) -> Result<FeatureVector> {
        let graph = self.graph(seq)?;
        compute_features(&graph, &quadrant_graph_of(&graph, &self.coords)?)
    }

    pub fn features_of_file(&self, id: &str, path: &Path) -> Result<FeatureVector> {
        let bytes = fs::read(path)?;
        self.features(&self.extract_bytes(id, &bytes, Some(path))?)
    }

    /// Feature rows for every manifest entry, in manifest order, using up
    /// to `jobs` worker threads.
    pub fn batch(&self, rows: &[ManifestRow], jobs: usize) -> Result<Vec<Result<FeatureVector>>> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| Error::Domain(format!("cannot start worker pool: {e}")))?;
        Ok(pool.install(|| {
            rows.par_iter()
                .map(|row| self.features_of_file(&row.id, &row.path))
                .collect()
        }))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub id: String,
    /// Resolved against the manifest's directory when relative.
    pub path: PathBuf,
    pub group: Option<Group>,
    pub age: Option<f64>,
    pub education_years: Option<f64>,
    pub gender: Option<f64>,
}

/// Parse a manifest. `id` and `path` columns are required; `group`, `age`,
/// `education_years` and `gender` are read when present.
pub fn read_manifest(text: &str, base_dir: &Path) -> Result<Vec<ManifestRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let id_col = col("id").ok_or_else(|| Error::schema("manifest has no id column"))?;
    let path_col = col("path").ok_or_else(|| Error::schema("manifest has no path column"))?;
    let (group_col, age_col, edu_col, gender_col) = (col("group"), col("age"), col("education_years"), col("gender"));

    let mut seen = BTreeSet::new();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let cell = |c: Option<usize>| c.and_then(|i| record.get(i)).map(str::trim).filter(|s| !s.is_empty());
        let id = cell(Some(id_col)).ok_or_else(|| Error::schema("manifest row with empty id"))?;
        if !seen.insert(id.to_string()) {
            return Err(Error::schema(format!("duplicate manifest id {id:?}")));
        }
        let path = PathBuf::from(cell(Some(path_col)).unwrap_or(""));
        let number = |c: Option<usize>, name: &str| -> Result<Option<f64>> {
            cell(c)
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::schema(format!("{id}: bad {name} value {s:?}")))
                })
                .transpose()
        };
        rows.push(ManifestRow {
            id: id.to_string(),
            path: if path.is_relative() { base_dir.join(path) } else { path },
            group: cell(group_col).map(str::parse).transpose()?,
            age: number(age_col, "age")?,
            education_years: number(edu_col, "education_years")?,
            gender: number(gender_col, "gender")?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_detection() {
        assert_eq!(detect_format(None, Some(Path::new("a.cha")), b"x"), SourceFormat::Chat);
        assert_eq!(detect_format(None, None, b"\n@UTF8\n@Begin\n"), SourceFormat::Chat);
        assert_eq!(detect_format(None, None, b"the boy"), SourceFormat::PlainText);
        assert_eq!(
            detect_format(Some(SourceFormat::PlainText), Some(Path::new("a.cha")), b""),
            SourceFormat::PlainText
        );
    }

    #[test]
    fn manifest_parsing() {
        let text = "id,path,group,age,education_years,gender\na,t/a.txt,impaired,71,12,0\nb,/abs/b.cha,,,,\n";
        let rows = read_manifest(text, Path::new("/data")).unwrap();
        assert_eq!(rows[0].path, PathBuf::from("/data/t/a.txt"));
        assert_eq!(rows[0].group, Some(Group::Impaired));
        assert_eq!(rows[1].path, PathBuf::from("/abs/b.cha"));
        assert_eq!(rows[1].age, None);
        assert!(read_manifest("id,path\na,x\na,y\n", Path::new(".")).is_err());
        assert!(read_manifest("id,file\n", Path::new(".")).is_err());
        assert!(read_manifest("id,path\n", Path::new(".")).unwrap().is_empty());
    }

    #[test]
    fn missing_config_file_is_an_error() {
        let cfg = RunConfig {
            lexicon_path: Some("/nonexistent/lexicon.json".into()),
            ..RunConfig::default()
        };
        assert!(cfg.load().is_err());
    }

    #[test]
    fn end_to_end_sentence() {
        let p = Pipeline::default();
        let seq = p
            .extract_bytes("t", b"The boy is on the stool. The water is overflowing.", None)
            .unwrap();
        let fv = p.features(&seq).unwrap();
        assert_eq!(fv.nodes as usize, seq.len());
        assert!(seq.len() >= 3);
    }
}
