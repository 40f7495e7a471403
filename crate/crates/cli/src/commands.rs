use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use hsa_core::ingest::{filter_cohort_with_breaks, load_person_years, CohortFilter};
use hsa_core::markov::{estimate_model, persistence_report, FallbackPolicy, PersonFilter, TransitionModel};
use hsa_core::report::{
    covered_snapshot_ages, expense_profile, expense_table, histogram_feed, level_share_table,
    render_ci_usage, render_coverage, render_expense_table, render_level_shares, render_snapshots,
    study_report, ExpenseGrouping, HistogramKind, ReportMetadata, SYNTHETIC_CALIBRATED,
};
use hsa_core::sampler::{DistributionSet, InitialPool};
use hsa_core::sim::{run_study, SimInputs, SimulationParams, StudyResult};
use hsa_core::synth::{generate_dataset, SynthCalibration};

use crate::manifest::{artifact, sidecar, write_atomic, RunManifest, MANIFEST_FILE};

pub const MODEL_FILE: &str = "model.json";
pub const STUDY_FILE: &str = "study.json";
const USER_SUPPLIED: &str = "user-supplied";

/// Collects files written into one output directory.
struct OutDir {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl OutDir {
    fn create(dir: &Path) -> Result<OutDir> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(OutDir { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.written.push(path);
        Ok(())
    }

    fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.bytes(name, &bytes)
    }

    fn finish(self, mut manifest: RunManifest) -> Result<()> {
        for p in &self.written {
            manifest.outputs.push(artifact(p)?);
        }
        manifest.write(&self.dir.join(MANIFEST_FILE))
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Origin of a data file, taken from the manifest `synth` leaves beside it.
fn data_origin(data: &Path) -> String {
    match RunManifest::load(&sidecar(data)) {
        Ok(m) if m.command == "synth" => SYNTHETIC_CALIBRATED.into(),
        Ok(m) => m.data_origin.unwrap_or_else(|| USER_SUPPLIED.into()),
        Err(_) => USER_SUPPLIED.into(),
    }
}

pub fn synth(config: Option<&Path>, out: &Path) -> Result<()> {
    let cal: SynthCalibration = match config {
        Some(p) => read_json(p)?,
        None => SynthCalibration::default(),
    };
    let ds = generate_dataset(&cal)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut bytes = Vec::new();
    ds.write_csv(&mut bytes)?;
    write_atomic(out, &bytes)?;

    let mut m = RunManifest::new("synth");
    if let Some(p) = config {
        m.add_input(p)?;
        m.config = Some(p.to_path_buf());
    }
    m.parameters = serde_json::to_value(&cal)?;
    m.seed = Some(cal.seed);
    m.outputs.push(artifact(out)?);
    m.data_origin = Some(SYNTHETIC_CALIBRATED.into());
    m.write(&sidecar(out))
}

pub fn estimate(data: &Path, out: &Path) -> Result<()> {
    let ds = load_person_years(data)?;
    let cohort = filter_cohort_with_breaks(&ds, CohortFilter::default(), Default::default())?;
    let model = estimate_model(&cohort, FallbackPolicy::default())?;

    let mut o = OutDir::create(out)?;
    o.json(MODEL_FILE, &model)?;
    o.json("cohort_filter.json", &cohort.report)?;
    for (name, filter) in [
        ("all", PersonFilter::All),
        ("ages_21_40", PersonFilter::AgeWithin { min: 21, max: 40 }),
        ("ages_41_65", PersonFilter::AgeWithin { min: 41, max: 65 }),
    ] {
        let r = persistence_report(&cohort, filter)?;
        o.json(&format!("persistence_{name}.json"), &r)?;
        o.json(&format!("heatmap_{name}.json"), &r.heatmap_rows())?;
        o.json(&format!("homogeneity_{name}.json"), &r.homogeneity_diagnostic())?;
    }
    o.json("provenance.json", &model.provenance_summary())?;

    let mut m = RunManifest::new("estimate");
    m.add_input(data)?;
    m.parameters = serde_json::json!({
        "cohort_filter": cohort.filter,
        "fallback_policy": model.policy,
        "window": model.window,
        "breaks": model.breaks,
    });
    m.data_origin = Some(data_origin(data));
    o.finish(m)
}

pub struct SimulateArgs<'a> {
    pub model: &'a Path,
    pub data: &'a Path,
    pub config: Option<&'a Path>,
    pub paper: bool,
    pub threads: Option<usize>,
    pub out: &'a Path,
}

pub fn simulate(a: SimulateArgs<'_>) -> Result<()> {
    let params: SimulationParams = match (a.config, a.paper) {
        (Some(p), _) => read_json(p)?,
        (None, true) => SimulationParams::paper(),
        (None, false) => SimulationParams::default(),
    };
    if a.paper {
        eprintln!(
            "warning: the paper preset runs {} replications of {} lives; expect a long run on a desktop",
            params.n_replications, params.n_lives
        );
    }
    let model_path = a.model.join(MODEL_FILE);
    let model: TransitionModel = read_json(&model_path)?;
    if model.breaks != params.level_breaks {
        bail!("model level breaks differ from the study configuration");
    }
    let ds = load_person_years(a.data)?;
    let cohort = filter_cohort_with_breaks(&ds, CohortFilter::default(), model.breaks)?;
    let dists = DistributionSet::from_cohort(&cohort)?;
    let pool = InitialPool::from_cohort(&cohort)?;
    let inputs = SimInputs::new(&model, &dists, &pool, &params)?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = a.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        builder = builder.num_threads(n);
    }
    let workers = builder.build()?;
    let study = workers.install(|| run_study(&inputs))?;

    let mut o = OutDir::create(a.out)?;
    o.json(STUDY_FILE, &study)?;

    let mut m = RunManifest::new("simulate");
    m.add_input(&model_path)?;
    m.add_input(a.data)?;
    if let Some(p) = a.config {
        m.add_input(p)?;
        m.config = Some(p.to_path_buf());
    }
    m.preset = a.paper.then(|| "paper".into());
    m.parameters = serde_json::to_value(&params)?;
    m.seed = Some(params.master_seed);
    m.data_origin = Some(data_origin(a.data));
    o.finish(m)
}

pub fn report(study_dir: &Path, data: Option<&Path>, out: &Path) -> Result<()> {
    let study_path = study_dir.join(STUDY_FILE);
    let study: StudyResult = read_json(&study_path)?;
    let origin = RunManifest::load(&study_dir.join(MANIFEST_FILE))
        .ok()
        .and_then(|m| m.data_origin)
        .unwrap_or_else(|| USER_SUPPLIED.into());
    let metadata = ReportMetadata::new(origin);
    let ages = covered_snapshot_ages(&study);
    let rep = study_report(&study, metadata.clone(), &ages)?;

    let mut o = OutDir::create(out)?;
    o.json("report.json", &rep)?;
    o.json("snapshots.json", &rep.snapshots)?;
    o.json("ci_usage.json", &rep.ci_usage)?;
    o.json("coverage.json", &rep.coverage)?;
    o.json("hist_final_balance.json", &histogram_feed(&study, HistogramKind::FinalBalance)?)?;
    o.json("hist_ci_total.json", &histogram_feed(&study, HistogramKind::CiTotal)?)?;
    o.json("hist_ci_total_log10.json", &histogram_feed(&study, HistogramKind::CiTotalLog10)?)?;
    o.json("scatter.json", &study.scatter)?;

    let mut text = format!("data origin: {}\n", metadata.data_origin);
    if metadata.is_synthetic() {
        text.push_str("NOTE: figures come from synthetic data calibrated to published summaries.\n");
    }
    text.push('\n');
    for t in [render_snapshots(&rep.snapshots), render_ci_usage(&rep.ci_usage), render_coverage(&rep.coverage)] {
        text.push_str(&t.render());
        text.push('\n');
    }

    let mut m = RunManifest::new("report");
    m.add_input(&study_path)?;
    if let Some(d) = data {
        let ds = load_person_years(d)?;
        let cohort = filter_cohort_with_breaks(&ds, CohortFilter::default(), study.params.level_breaks)?;
        let shares = level_share_table(&cohort);
        o.json("level_shares.json", &shares)?;
        text.push_str(&render_level_shares(&shares).render());
        text.push('\n');
        for (name, title, g) in [
            ("expenses_all", "Annual expenses, positive only", ExpenseGrouping::All),
            ("expenses_sex", "Annual expenses by sex, positive only", ExpenseGrouping::Sex),
            ("expenses_stratum", "Annual expenses by stratum, positive only", ExpenseGrouping::Stratum),
        ] {
            let rows = expense_table(&cohort, g)?;
            o.json(&format!("{name}.json"), &rows)?;
            text.push_str(&render_expense_table(title, &rows).render());
            text.push('\n');
        }
        o.json("expense_profile.json", &expense_profile(&cohort)?)?;
        m.add_input(d)?;
    }
    o.bytes("tables.txt", text.as_bytes())?;

    m.parameters = serde_json::json!({ "snapshot_ages": ages });
    m.seed = Some(study.params.master_seed);
    m.data_origin = Some(metadata.data_origin);
    o.finish(m)
}
