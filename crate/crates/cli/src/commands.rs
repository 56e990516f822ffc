use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use log::{info, warn};
use vtid_core::addfs::{rank_features, AddfsParams};
use vtid_core::dataset::{load_tabular, LabeledDataset};
use vtid_core::eval::{
    ablation_peak_features, compare, param_sweep, run_sweep, ClassifierSpec, EvalConfig, EvalReport,
    ParamPoint, Selector,
};
use vtid_core::features::{extract_matrix_with, feature_dictionary, PeakParams};
use vtid_core::ingest::{
    assemble_flows, filter_elephant, label_flows, read_capture, read_text_trace, Flow, LabelRules,
};
use vtid_core::Exec;
use walkdir::WalkDir;

use crate::config::{CompareConfig, EvalSection, ExtractConfig, FileConfig, RankConfig};
use crate::{AddfsArgs, ClassifierArgs, Cli, Command, PeakArgs};

pub fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let jobs = cli.jobs.or(file.jobs);
    let exec = setup_threads(jobs)?;
    let mut effective = FileConfig {
        jobs,
        ..FileConfig::default()
    };
    match cli.command {
        Command::Extract(a) => {
            let mut c = file.extract.unwrap_or_default();
            if !a.inputs.is_empty() {
                c.inputs = a.inputs;
            }
            over(&mut c.output, a.output);
            over(&mut c.labels, a.labels);
            over(&mut c.dictionary, a.dictionary);
            if let Some(t) = a.elephant_threshold {
                c.elephant_threshold = t;
            }
            if a.no_elephant_filter {
                c.elephant_filter = false;
            }
            apply_peak(&mut c.peak, &a.peak);
            effective.extract = Some(c.clone());
            echo(&cli.echo_config, &effective)?;
            extract(&c, exec)
        }
        Command::Rank(a) => {
            let mut c = file.rank.unwrap_or_default();
            over(&mut c.dataset, a.dataset);
            over(&mut c.output, a.output);
            apply_addfs(&mut c.addfs, &a.addfs);
            effective.rank = Some(c.clone());
            echo(&cli.echo_config, &effective)?;
            rank(&c, exec)
        }
        Command::Eval(a) => {
            let mut c = file.eval.unwrap_or_default();
            over(&mut c.dataset, a.dataset);
            over(&mut c.out_dir, a.out_dir);
            set(&mut c.selector, a.selector);
            set(&mut c.fractions, a.fractions.map(|f| f.0));
            apply_model(&mut c.classifier, &mut c.k, &mut c.folds, &mut c.seed, &a.model);
            c.leaky_selection |= a.model.leaky_selection;
            c.ablate_peaks |= a.ablate_peaks;
            c.window_sweep |= a.window_sweep;
            c.offset_sweep |= a.offset_sweep;
            if !a.traces.is_empty() {
                c.traces = a.traces;
            }
            over(&mut c.labels, a.labels);
            if let Some(t) = a.elephant_threshold {
                c.elephant_threshold = t;
            }
            if a.no_elephant_filter {
                c.elephant_filter = false;
            }
            apply_addfs(&mut c.addfs, &a.addfs);
            apply_peak(&mut c.peak, &a.peak);
            effective.eval = Some(c.clone());
            echo(&cli.echo_config, &effective)?;
            eval(&c, exec)
        }
        Command::Compare(a) => {
            let mut c = file.compare.unwrap_or_default();
            if !a.datasets.is_empty() {
                c.datasets = a.datasets;
            }
            over(&mut c.out_dir, a.out_dir);
            if !a.selectors.is_empty() {
                c.selectors = a.selectors;
            }
            set(&mut c.fractions, a.fractions.map(|f| f.0));
            apply_model(&mut c.classifier, &mut c.k, &mut c.folds, &mut c.seed, &a.model);
            c.leaky_selection |= a.model.leaky_selection;
            apply_addfs(&mut c.addfs, &a.addfs);
            effective.compare = Some(c.clone());
            echo(&cli.echo_config, &effective)?;
            run_compare(&c, exec)
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn over<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

fn apply_peak(p: &mut PeakParams, a: &PeakArgs) {
    set(&mut p.alpha, a.alpha);
    set(&mut p.beta, a.beta);
    set(&mut p.bucket, a.bucket);
    set(&mut p.window, a.window);
    set(&mut p.offset, a.offset);
}

fn apply_addfs(p: &mut AddfsParams, a: &AddfsArgs) {
    set(&mut p.max_intervals, a.max_intervals);
    set(&mut p.confidence, a.confidence);
    set(&mut p.support, a.support);
}

fn apply_model(
    kind: &mut vtid_core::eval::ClassifierKind,
    k: &mut usize,
    folds: &mut usize,
    seed: &mut Option<u64>,
    a: &ClassifierArgs,
) {
    set(kind, a.classifier);
    set(k, a.k);
    set(folds, a.folds);
    over(seed, a.seed);
}

fn setup_threads(jobs: Option<usize>) -> Result<Exec> {
    match jobs {
        Some(0) => bail!("--jobs must be at least 1"),
        Some(1) => Ok(Exec::Sequential),
        #[cfg(feature = "parallel")]
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .context("configuring the thread pool")?;
            Ok(Exec::Parallel)
        }
        #[cfg(not(feature = "parallel"))]
        Some(_) => {
            warn!("built without parallel support; running sequentially");
            Ok(Exec::Sequential)
        }
        None => Ok(Exec::default()),
    }
}

fn echo(path: &Option<PathBuf>, cfg: &FileConfig) -> Result<()> {
    if let Some(path) = path {
        let text = cfg.to_toml()?;
        eprint!("{text}");
        fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn required<'a>(v: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    v.as_deref().ok_or_else(|| anyhow!("{flag} is required"))
}

enum Reader {
    Capture,
    Text,
}

fn reader_for(path: &Path) -> Option<Reader> {
    let ext = path.extension()?.to_str()?.to_ascii_lowercase();
    match ext.as_str() {
        "pcap" | "cap" => Some(Reader::Capture),
        "trace" | "csv" | "txt" => Some(Reader::Text),
        _ => None,
    }
}

/// Counts reported by [`collect_flows`].
#[derive(Debug, Default)]
pub struct Census {
    pub files: usize,
    pub assembled: usize,
    pub unlabeled: usize,
    pub kept: usize,
}

/// Reads every trace under `inputs`, assembles flows per file and labels
/// them. A flow takes the name of its top-level subdirectory below an input
/// directory; a matching SNI rule overrides that.
pub fn collect_flows(
    inputs: &[PathBuf],
    rules: Option<&LabelRules>,
    threshold: Option<usize>,
) -> Result<(Vec<Flow>, Census)> {
    let mut census = Census::default();
    let mut flows = Vec::new();
    for input in inputs {
        let meta = fs::metadata(input).with_context(|| format!("reading {}", input.display()))?;
        let entries: Vec<(PathBuf, PathBuf)> = if meta.is_dir() {
            let mut v = Vec::new();
            for e in WalkDir::new(input).sort_by_file_name() {
                let e = e.with_context(|| format!("walking {}", input.display()))?;
                if e.file_type().is_file() && reader_for(e.path()).is_some() {
                    let rel = e.path().strip_prefix(input).unwrap_or(e.path()).to_owned();
                    v.push((e.into_path(), rel));
                }
            }
            v
        } else {
            let name = input.file_name().map(PathBuf::from).unwrap_or_else(|| input.clone());
            vec![(input.clone(), name)]
        };
        for (path, rel) in entries {
            let packets = match reader_for(&path) {
                Some(Reader::Capture) => read_capture(&path),
                Some(Reader::Text) | None => read_text_trace(&path),
            }
            .with_context(|| format!("reading {}", path.display()))?;
            census.files += 1;
            let dir_label = {
                let mut comps = rel.components();
                let first = comps.next();
                first
                    .filter(|_| comps.next().is_some())
                    .and_then(|c| c.as_os_str().to_str())
                    .map(str::to_owned)
            };
            let rel_str = rel.to_string_lossy().replace('\\', "/");
            let assembled: Vec<Flow> = assemble_flows(packets)
                .into_iter()
                .map(|f| {
                    let id = format!("{rel_str}:{}", f.key());
                    f.with_id(id)
                })
                .collect();
            census.assembled += assembled.len();
            let labeled = label_flows(assembled, rules, dir_label.as_deref());
            for &i in &labeled.unlabeled {
                warn!("dropping unlabeled flow {}", labeled.flows[i].id());
            }
            census.unlabeled += labeled.unlabeled.len();
            flows.extend(labeled.flows.into_iter().filter(|f| f.label().is_some()));
        }
    }
    if let Some(t) = threshold {
        flows = filter_elephant(flows, t);
    }
    census.kept = flows.len();
    Ok((flows, census))
}

fn load_rules(path: &Option<PathBuf>) -> Result<Option<LabelRules>> {
    path.as_ref()
        .map(|p| LabelRules::from_file(p).with_context(|| format!("reading label rules {}", p.display())))
        .transpose()
}

fn extract(c: &ExtractConfig, exec: Exec) -> Result<()> {
    if c.inputs.is_empty() {
        bail!("no trace inputs given");
    }
    let output = required(&c.output, "--output")?;
    c.peak.validate()?;
    let rules = load_rules(&c.labels)?;
    let threshold = c.elephant_filter.then_some(c.elephant_threshold);
    let (flows, census) = collect_flows(&c.inputs, rules.as_ref(), threshold)?;
    let labeled = census.assembled - census.unlabeled;
    println!(
        "{} files, {} flows assembled, {} labeled, {} kept after elephant filter",
        census.files, census.assembled, labeled, census.kept
    );
    if flows.is_empty() {
        warn!("no flows left to extract");
    }
    let matrix = extract_matrix_with(&flows, &c.peak, exec)?;
    let mut w = create(output)?;
    match threshold {
        Some(t) => writeln!(w, "# elephant_threshold={t}")?,
        None => writeln!(w, "# elephant_filter=off")?,
    }
    matrix.write_csv(&mut w)?;
    w.flush()?;
    if let Some(d) = &c.dictionary {
        fs::write(d, feature_dictionary()).with_context(|| format!("writing {}", d.display()))?;
    }
    println!("wrote {} rows to {}", matrix.len(), output.display());
    Ok(())
}

fn load_dataset(path: &Path) -> Result<LabeledDataset> {
    let loaded = load_tabular(path).with_context(|| format!("loading {}", path.display()))?;
    if loaded.rejected_rows > 0 {
        warn!("{}: skipped {} rows with missing values", path.display(), loaded.rejected_rows);
    }
    let d = loaded.dataset;
    info!(
        "{}: {} samples, {} features, {} classes",
        path.display(),
        d.n_samples(),
        d.n_features(),
        d.n_classes()
    );
    Ok(d)
}

fn rank(c: &RankConfig, exec: Exec) -> Result<()> {
    let data = load_dataset(required(&c.dataset, "--dataset")?)?;
    let output = required(&c.output, "--output")?;
    let ranking = rank_features(&data, &c.addfs, exec)?;
    let mut w = create(output)?;
    ranking.write_csv(&mut w)?;
    w.flush()?;
    for (r, &j) in ranking.order.iter().take(10).enumerate() {
        println!("{:>3}  {:<32} {:.6}", r + 1, ranking.feature_names[j], ranking.scores[j]);
    }
    Ok(())
}

fn eval_config(
    seed: Option<u64>,
    kind: vtid_core::eval::ClassifierKind,
    k: usize,
    folds: usize,
    leaky: bool,
) -> Result<EvalConfig> {
    let seed = seed.ok_or_else(|| anyhow!("--seed is required"))?;
    Ok(EvalConfig {
        classifier: ClassifierSpec { kind, k },
        folds,
        seed,
        leaky,
    })
}

fn print_reports(reports: &[EvalReport]) {
    println!("{:<8} {:>8} {:>6} {:>9} {:>9}", "selector", "fraction", "feats", "accuracy", "macro-F1");
    for r in reports {
        println!(
            "{:<8} {:>8} {:>6} {:>9.4} {:>9.4}",
            r.selector, r.fraction, r.n_features, r.mean_accuracy, r.mean_f1
        );
    }
}

fn eval(c: &EvalSection, exec: Exec) -> Result<()> {
    let config = eval_config(c.seed, c.classifier, c.k, c.folds, c.leaky_selection)?;
    let out_dir = required(&c.out_dir, "--out-dir")?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let sweeps = c.window_sweep || c.offset_sweep;
    if c.dataset.is_none() && !sweeps {
        bail!("--dataset is required");
    }
    if let Some(path) = &c.dataset {
        let data = load_dataset(path)?;
        let selector = Selector {
            kind: c.selector,
            addfs: c.addfs,
        };
        let reports = run_sweep(&data, &selector, &c.fractions, &config, exec)?;
        let mut w = create(&out_dir.join("sweep.csv"))?;
        EvalReport::write_csv(&reports, &mut w)?;
        w.flush()?;
        print_reports(&reports);
        if c.ablate_peaks {
            let ab = ablation_peak_features(&data, &config, exec)?;
            let mut w = create(&out_dir.join("ablation.csv"))?;
            ab.write_csv(&mut w)?;
            w.flush()?;
            println!(
                "ablation: all {:.4} / without peak features {:.4} (accuracy delta {:+.4}, F1 delta {:+.4})",
                ab.full.mean_accuracy, ab.reduced.mean_accuracy, ab.delta_accuracy, ab.delta_f1
            );
        }
    } else if c.ablate_peaks {
        bail!("--ablate-peaks needs --dataset");
    }
    if sweeps {
        if c.traces.is_empty() {
            bail!("parameter sweeps need --traces");
        }
        let rules = load_rules(&c.labels)?;
        let threshold = c.elephant_filter.then_some(c.elephant_threshold);
        let (flows, census) = collect_flows(&c.traces, rules.as_ref(), threshold)?;
        println!("{} flows kept for parameter sweeps", census.kept);
        let run = |name: &str, values: &[f64], file: &str| -> Result<()> {
            let points: Vec<(String, f64, PeakParams)> = values
                .iter()
                .map(|&v| {
                    let mut p = c.peak;
                    match name {
                        "window" => p.window = v,
                        _ => p.offset = v,
                    }
                    (name.to_owned(), v, p)
                })
                .collect();
            let results = param_sweep(&flows, &points, &config, exec)?;
            let mut w = create(&out_dir.join(file))?;
            ParamPoint::write_csv(&results, &mut w)?;
            w.flush()?;
            for p in &results {
                println!("{}={:<6} accuracy {:.4}", p.parameter, p.value, p.report.mean_accuracy);
            }
            Ok(())
        };
        if c.window_sweep {
            run("window", &c.windows, "window_sweep.csv")?;
        }
        if c.offset_sweep {
            run("offset", &c.offsets, "offset_sweep.csv")?;
        }
    }
    Ok(())
}

fn run_compare(c: &CompareConfig, exec: Exec) -> Result<()> {
    let config = eval_config(c.seed, c.classifier, c.k, c.folds, c.leaky_selection)?;
    let out_dir = required(&c.out_dir, "--out-dir")?;
    if c.datasets.is_empty() {
        bail!("--datasets is required");
    }
    if c.selectors.len() < 2 {
        bail!("need at least two selectors to compare");
    }
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let datasets = c
        .datasets
        .iter()
        .map(|p| {
            let name = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string());
            load_dataset(p).map(|d| (name, d))
        })
        .collect::<Result<Vec<_>>>()?;
    let selectors: Vec<Selector> = c
        .selectors
        .iter()
        .map(|&kind| Selector { kind, addfs: c.addfs })
        .collect();
    let cmp = compare(&datasets, &selectors, &c.fractions, &config, exec)?;
    let mut w = create(&out_dir.join("comparison.csv"))?;
    cmp.write_csv(&mut w)?;
    w.flush()?;
    if datasets.len() < 2 {
        warn!("Wilcoxon tests need at least two datasets; skipped");
    }
    for &f in &c.fractions {
        if datasets.len() >= 2 {
            let mut w = create(&out_dir.join(format!("wilcoxon_{f}.csv")))?;
            cmp.write_wilcoxon_csv(f, &mut w)?;
            w.flush()?;
        }
        println!("fraction {f}:");
        for (d, s, _, acc) in cmp.rows.iter().filter(|r| r.2 == f) {
            println!("  {d:<16} {s:<8} {acc:.4}");
        }
        for row in cmp.wilcoxon.iter().filter(|r| r.fraction == f) {
            match &row.result {
                Some(r) => println!("  {}: R+ {} R- {} p {:.4}", row.vs, r.r_plus, r.r_minus, r.p_value),
                None => println!("  {}: undefined (all differences zero)", row.vs),
            }
        }
    }
    Ok(())
}
