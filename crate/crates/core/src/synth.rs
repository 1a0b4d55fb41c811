//! Synthetic cohorts with controllable group differences.
//!
//! Each subject gets a CIU walk sampled from its group's parameters, which
//! is then written out as plain text by picking, for every mention, a word
//! that maps to that CIU alone. Running the text back through the pipeline
//! recovers the walk.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::format_real;
use crate::ingest::parse_plain;
use crate::lexicon::{CiuId, CIU_COUNT};
use crate::pipeline::Pipeline;
use crate::spatial::Quadrant;
use crate::stats::{CohortRecord, Group};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalParams {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupParams {
    /// Distinct CIUs mentioned, drawn from a rounded normal clamped to 1..=23.
    pub unique: NormalParams,
    /// Expected repeated mentions per distinct CIU (Poisson).
    pub repeat_rate: f64,
    /// Probability that the next new CIU lies in a different quadrant.
    pub cross_rate: f64,
    pub age: NormalParams,
    pub education: NormalParams,
    /// Probability of gender code 1.
    pub gender_rate: f64,
}

impl Default for GroupParams {
    fn default() -> Self {
        GroupParams {
            unique: NormalParams { mean: 12.0, sd: 3.0 },
            repeat_rate: 0.25,
            cross_rate: 0.5,
            age: NormalParams { mean: 70.0, sd: 8.0 },
            education: NormalParams { mean: 15.0, sd: 3.0 },
            gender_rate: 0.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub n_per_group: usize,
    pub seed: u64,
    /// Pack consecutive mentions into sentences of up to three CIUs.
    #[serde(default)]
    pub multi_ciu_sentences: bool,
    pub unimpaired: GroupParams,
    pub impaired: GroupParams,
}

impl SynthSpec {
    /// Both groups drawn from the same parameters.
    pub fn null(n_per_group: usize, seed: u64) -> Self {
        SynthSpec {
            n_per_group,
            seed,
            multi_ciu_sentences: false,
            unimpaired: GroupParams::default(),
            impaired: GroupParams::default(),
        }
    }

    /// Impaired speakers revisit CIUs twice as often.
    pub fn repeat_effect(n_per_group: usize, seed: u64) -> Self {
        let mut spec = SynthSpec::null(n_per_group, seed);
        spec.impaired.repeat_rate *= 2.0;
        spec
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let spec: SynthSpec = serde_json::from_slice(bytes).map_err(|e| Error::Spec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, g) in [("unimpaired", &self.unimpaired), ("impaired", &self.impaired)] {
            let bad = |what: &str| Err(Error::Spec(format!("{name}: {what}")));
            let normals = [("unique", g.unique), ("age", g.age), ("education", g.education)];
            for (field, n) in normals {
                if !(n.mean.is_finite() && n.sd.is_finite() && n.sd >= 0.0) {
                    return bad(&format!("{field} needs a finite mean and sd >= 0"));
                }
            }
            if !(1.0..=CIU_COUNT as f64).contains(&g.unique.mean) {
                return bad("unique.mean must lie in 1..=23");
            }
            if !(g.repeat_rate.is_finite() && (0.0..=50.0).contains(&g.repeat_rate)) {
                return bad("repeat_rate must lie in 0..=50");
            }
            if !(0.0..=1.0).contains(&g.cross_rate) {
                return bad("cross_rate must lie in 0..=1");
            }
            if !(0.0..=1.0).contains(&g.gender_rate) {
                return bad("gender_rate must lie in 0..=1");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSubject {
    pub id: String,
    pub group: Group,
    pub age: f64,
    pub education_years: f64,
    pub gender: f64,
    pub sequence: Vec<CiuId>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Cohort {
    pub subjects: Vec<SynthSubject>,
}

const TEMPLATES: [&str; 3] = ["there is the {}.", "and the {}.", "I can see the {}."];

fn fill(template: &str, word: &str) -> String {
    template.replacen("{}", word, 1)
}

/// Words that, in every sentence template, extract to exactly their CIU.
fn unambiguous_words(pipeline: &Pipeline) -> Result<BTreeMap<CiuId, Vec<String>>> {
    let mut words: BTreeMap<CiuId, Vec<String>> = BTreeMap::new();
    for (word, ids) in pipeline.lexicon.entries() {
        if ids.len() != 1 || pipeline.lexicon.low_precision().contains(word) {
            continue;
        }
        let ok = TEMPLATES.iter().all(|t| {
            parse_plain("probe", fill(t, word).as_bytes())
                .map(|tr| pipeline.sequence(&tr).ids() == ids[..])
                .unwrap_or(false)
        });
        if ok {
            words.entry(ids[0]).or_default().push(word.clone());
        }
    }
    if let Some(missing) = CiuId::all().find(|id| !words.contains_key(id)) {
        return Err(Error::Spec(format!(
            "lexicon has no unambiguous word for CIU {missing}"
        )));
    }
    Ok(words)
}

fn sample_normal(rng: &mut ChaCha8Rng, p: NormalParams) -> f64 {
    if p.sd == 0.0 {
        p.mean
    } else {
        Normal::new(p.mean, p.sd).expect("validated").sample(rng)
    }
}

fn round1(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

fn sample_walk(rng: &mut ChaCha8Rng, params: &GroupParams, quadrant: &BTreeMap<CiuId, Quadrant>) -> Vec<CiuId> {
    let k = sample_normal(rng, params.unique).round().clamp(1.0, CIU_COUNT as f64) as usize;
    let mut pool: Vec<CiuId> = CiuId::all().collect();
    pool.shuffle(rng);
    pool.truncate(k);

    let mut walk = vec![pool.swap_remove(rng.random_range(0..pool.len()))];
    while !pool.is_empty() {
        let here = quadrant[walk.last().expect("non-empty")];
        let (other, same): (Vec<usize>, Vec<usize>) = (0..pool.len()).partition(|&i| quadrant[&pool[i]] != here);
        let want_cross = rng.random::<f64>() < params.cross_rate;
        let candidates = match (want_cross, other.is_empty(), same.is_empty()) {
            (true, false, _) | (false, false, true) => other,
            _ => same,
        };
        let pick = *candidates.choose(rng).expect("one side is non-empty");
        walk.push(pool.swap_remove(pick));
    }

    let repeats = if params.repeat_rate > 0.0 {
        Poisson::new(params.repeat_rate * k as f64)
            .expect("positive rate")
            .sample(rng) as usize
    } else {
        0
    };
    for _ in 0..repeats {
        let at = rng.random_range(1..=walk.len());
        let again = walk[rng.random_range(0..at)];
        walk.insert(at, again);
    }
    walk
}

fn render_text(rng: &mut ChaCha8Rng, walk: &[CiuId], words: &BTreeMap<CiuId, Vec<String>>, multi: bool) -> String {
    let mut text = String::new();
    let mut i = 0;
    while i < walk.len() {
        let size = if multi {
            rng.random_range(1..=3).min(walk.len() - i)
        } else {
            1
        };
        let chosen: Vec<&str> = walk[i..i + size]
            .iter()
            .map(|id| words[id].choose(rng).expect("non-empty").as_str())
            .collect();
        let sentence = if size == 1 {
            fill(TEMPLATES.choose(rng).expect("templates"), chosen[0])
        } else {
            format!("there is the {}.", chosen.join(" and the "))
        };
        if !text.is_empty() {
            text.push(' ');
        }
        text.push_str(&sentence);
        i += size;
    }
    text.push('\n');
    text
}

/// Draw a cohort; identical spec gives an identical cohort.
pub fn generate_cohort(spec: &SynthSpec, pipeline: &Pipeline) -> Result<Cohort> {
    spec.validate()?;
    if spec.n_per_group == 0 {
        return Ok(Cohort::default());
    }
    let words = unambiguous_words(pipeline)?;
    let quadrant = CiuId::all()
        .map(|id| Ok((id, pipeline.coords.quadrant_of_ciu(id)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let width = spec.n_per_group.to_string().len().max(3);
    let mut subjects = Vec::with_capacity(2 * spec.n_per_group);
    for (group, params, prefix) in [
        (Group::Unimpaired, &spec.unimpaired, "ctl"),
        (Group::Impaired, &spec.impaired, "imp"),
    ] {
        for i in 0..spec.n_per_group {
            let sequence = sample_walk(&mut rng, params, &quadrant);
            let text = render_text(&mut rng, &sequence, &words, spec.multi_ciu_sentences);
            subjects.push(SynthSubject {
                id: format!("{prefix}_{:0width$}", i + 1),
                group,
                age: round1(sample_normal(&mut rng, params.age)),
                education_years: round1(sample_normal(&mut rng, params.education).max(0.0)),
                gender: if rng.random::<f64>() < params.gender_rate {
                    1.0
                } else {
                    0.0
                },
                sequence,
                text,
            });
        }
    }
    Ok(Cohort { subjects })
}

impl Cohort {
    /// Manifest with paths `<transcript_dir>/<id>.txt`.
    pub fn manifest_csv(&self, transcript_dir: &str) -> String {
        let mut out = String::from("id,path,group,age,education_years,gender\n");
        for s in &self.subjects {
            let _ = writeln!(
                out,
                "{},{}/{}.txt,{},{},{},{}",
                s.id,
                transcript_dir,
                s.id,
                s.group.name(),
                format_real(s.age),
                format_real(s.education_years),
                s.gender as u8
            );
        }
        out
    }

    /// Writes `manifest.csv` and `transcripts/<id>.txt` under `dir`, returning
    /// the manifest path.
    pub fn write_to(&self, dir: &Path) -> Result<PathBuf> {
        let transcripts = dir.join("transcripts");
        fs::create_dir_all(&transcripts)?;
        for s in &self.subjects {
            fs::write(transcripts.join(format!("{}.txt", s.id)), &s.text)?;
        }
        let manifest = dir.join("manifest.csv");
        fs::write(&manifest, self.manifest_csv("transcripts"))?;
        Ok(manifest)
    }

    /// Run every transcript through the pipeline and attach demographics.
    pub fn records(&self, pipeline: &Pipeline) -> Result<Vec<CohortRecord>> {
        self.subjects
            .iter()
            .map(|s| {
                let seq = pipeline.extract_bytes(&s.id, s.text.as_bytes(), None)?;
                Ok(CohortRecord {
                    transcript_id: s.id.clone(),
                    group: Some(s.group),
                    age: Some(s.age),
                    education: Some(s.education_years),
                    gender: Some(s.gender),
                    features: pipeline.features(&seq)?,
                })
            })
            .collect()
    }
}
