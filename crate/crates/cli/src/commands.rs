use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use ecomplexity_core::error::Error as CoreError;
use ecomplexity_core::validation::RegressionReport;
use ecomplexity_core::{
    binarize, eci_pci, estimate_tau, fit_exponential, fitness_complexity, prune_degenerate, rank_transform,
    rca_binarize, run_income_regressions, simulate_world, tdi, tsi, BinaryMatrix, CountryMetrics, Counting, EciPci,
    EigenReport, ExponentialFit, FitnessOptions, FitnessOutcome, ModelParams, ProductMetrics, SimulationMode,
    TauEstimate,
};
use serde::Serialize;

use crate::config::{Filter, Mode, RunConfig};
use crate::error::{core_exit_code, CliError, Result};
use crate::format::{self, Cell, MatrixFile, Table};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct InputInfo {
    pub path: PathBuf,
    pub sha256: String,
}

impl InputInfo {
    fn read(path: &Path) -> Result<(Self, Vec<u8>)> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        Ok((Self { path: path.to_path_buf(), sha256: format::sha256_hex(&bytes) }, bytes))
    }
}

fn create_out_dir(cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| CliError::io(&cfg.out_dir, e))
}

fn say(out: &mut dyn Write, line: impl AsRef<str>) {
    // a closed stdout should not turn a finished run into a failure
    let _ = writeln!(out, "{}", line.as_ref());
}

pub fn ingest(trade_csv: &Path, output: Option<&Path>, cfg: &RunConfig, out: &mut dyn Write) -> Result<PathBuf> {
    let x = format::read_trade_csv(trade_csv)?;
    let text = format::to_canonical(&MatrixFile::Valued(x.clone()))?;
    let path = match output {
        Some(p) => p.to_path_buf(),
        None => {
            create_out_dir(cfg)?;
            cfg.out_dir.join("matrix.txt")
        }
    };
    format::write_file(&path, &text)?;
    let m = binarize(&x);
    say(
        out,
        format!(
            "countries={} products={} entries={} fill_rate={:.6} -> {}",
            m.n_countries(),
            m.n_products(),
            m.n_entries(),
            m.fill_rate(),
            path.display()
        ),
    );
    Ok(path)
}

/// Shape of the matrix before and after filtering and pruning.
#[derive(Debug, Clone, Serialize)]
pub struct MatrixSummary {
    pub countries_in: usize,
    pub products_in: usize,
    pub countries: usize,
    pub products: usize,
    pub entries: usize,
    pub fill_rate: f64,
    pub dropped_countries: Vec<String>,
    pub dropped_products: Vec<String>,
}

/// Applies the configured filter, then drops empty rows and columns until none remain.
pub fn prepare(file: &MatrixFile, cfg: &RunConfig) -> Result<(BinaryMatrix, MatrixSummary)> {
    let raw = match (file, cfg.filter) {
        (MatrixFile::Binary(m), Filter::None) => m.clone(),
        (MatrixFile::Valued(x), Filter::None) => binarize(x),
        (MatrixFile::Valued(x), Filter::Rca) => rca_binarize(&x.drop_empty_marginals()?, cfg.rca_threshold)?,
        (MatrixFile::Binary(_), Filter::Rca) => {
            return Err(CliError::Usage("--filter rca needs a matrix file with export values".into()))
        }
    };
    let m = prune_degenerate(&raw)?;
    let dropped = |all: &[String], kept: &[String]| -> Vec<String> {
        let kept: BTreeSet<&String> = kept.iter().collect();
        all.iter().filter(|l| !kept.contains(l)).cloned().collect()
    };
    let summary = MatrixSummary {
        countries_in: file.country_labels().len(),
        products_in: file.product_labels().len(),
        countries: m.n_countries(),
        products: m.n_products(),
        entries: m.n_entries(),
        fill_rate: m.fill_rate(),
        dropped_countries: dropped(file.country_labels(), m.country_labels()),
        dropped_products: dropped(file.product_labels(), m.product_labels()),
    };
    Ok((m, summary))
}

/// Every metric family computed independently, so one failure does not hide the others.
#[derive(Debug)]
pub struct Families {
    pub tdi: Result<Vec<f64>, CoreError>,
    pub tsi: Result<Vec<f64>, CoreError>,
    pub eci_pci: Result<EciPci, CoreError>,
    pub fitness: Result<FitnessOutcome, CoreError>,
}

impl Families {
    pub fn compute(m: &BinaryMatrix, cfg: &RunConfig) -> Self {
        let opts = FitnessOptions { tol: cfg.tol, max_iter: cfg.max_iter };
        Self { tdi: tdi(m), tsi: tsi(m), eci_pci: eci_pci(m), fitness: fitness_complexity(m, &opts) }
    }

    /// The converged scores, or the last iterate of a failed iteration.
    pub fn fitness_values(&self) -> Option<&FitnessOutcome> {
        match &self.fitness {
            Ok(o) => Some(o),
            Err(CoreError::NonConvergence { last, .. } | CoreError::NumericalUnderflow { last }) => Some(last),
            Err(_) => None,
        }
    }

    pub fn failures(&self) -> Vec<(String, CoreError)> {
        let mut failures = Vec::new();
        let mut note = |name: &str, e: Option<&CoreError>| {
            if let Some(e) = e {
                failures.push((name.to_string(), e.clone()));
            }
        };
        note("tdi", self.tdi.as_ref().err());
        note("tsi", self.tsi.as_ref().err());
        note("eci_pci", self.eci_pci.as_ref().err());
        note("fitness", self.fitness.as_ref().err());
        failures
    }

    fn column(v: &Result<Vec<f64>, CoreError>, i: usize) -> Cell {
        v.as_ref().ok().map(|v| v[i]).into()
    }

    pub fn country_table(&self, m: &BinaryMatrix) -> Table {
        let mut t = Table::new(&["label", "d", "tdi", "eci", "fitness"]);
        let eci = self.eci_pci.as_ref().ok();
        let f = self.fitness_values();
        for (i, label) in m.country_labels().iter().enumerate() {
            t.push(vec![
                label.as_str().into(),
                m.diversification()[i].into(),
                Self::column(&self.tdi, i),
                eci.map(|r| r.eci[i]).into(),
                f.map(|o| o.fitness[i]).into(),
            ]);
        }
        t
    }

    pub fn product_table(&self, m: &BinaryMatrix) -> Table {
        let mut t = Table::new(&["label", "u", "tsi", "pci", "q"]);
        let pci = self.eci_pci.as_ref().ok();
        let q = self.fitness_values();
        for (j, label) in m.product_labels().iter().enumerate() {
            t.push(vec![
                label.as_str().into(),
                m.ubiquity()[j].into(),
                Self::column(&self.tsi, j),
                pci.map(|r| r.pci[j]).into(),
                q.map(|o| o.complexity[j]).into(),
            ]);
        }
        t
    }
}

#[derive(Debug, Serialize)]
struct FamilyStatus {
    ok: bool,
    error: Option<String>,
    exit_code: i32,
}

impl FamilyStatus {
    fn of<T>(r: &Result<T, CoreError>) -> Self {
        match r {
            Ok(_) => Self { ok: true, error: None, exit_code: 0 },
            Err(e) => Self { ok: false, error: Some(e.to_string()), exit_code: core_exit_code(e) },
        }
    }
}

#[derive(Debug, Serialize)]
struct FitnessStatus {
    converged: bool,
    iterations: Option<usize>,
    change: Option<f64>,
    /// Whether the emitted F and Q columns are a non-converged last iterate.
    last_iterate_emitted: bool,
    error: Option<String>,
}

impl FitnessStatus {
    fn of(f: &Families) -> Self {
        let values = f.fitness_values();
        Self {
            converged: f.fitness.is_ok(),
            iterations: values.map(|o| o.iterations),
            change: values.map(|o| o.change).filter(|c| c.is_finite()),
            last_iterate_emitted: f.fitness.is_err() && values.is_some(),
            error: f.fitness.as_ref().err().map(|e| e.to_string()),
        }
    }
}

#[derive(Debug, Serialize)]
struct MetricsReport<'a> {
    command: &'static str,
    version: &'static str,
    input: InputInfo,
    config: &'a RunConfig,
    matrix: &'a MatrixSummary,
    tdi: FamilyStatus,
    tsi: FamilyStatus,
    eci_pci: FamilyStatus,
    eigen: Option<&'a EigenReport>,
    fitness: FitnessStatus,
    outputs: Vec<PathBuf>,
}

pub fn metrics(matrix: &Path, cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let (input, bytes) = InputInfo::read(matrix)?;
    let text = String::from_utf8(bytes).map_err(|_| CliError::Parse {
        path: matrix.to_path_buf(),
        line: 0,
        message: "not UTF-8".into(),
    })?;
    let file = format::parse_canonical(&text, matrix)?;
    let (m, summary) = prepare(&file, cfg)?;
    let families = Families::compute(&m, cfg);

    create_out_dir(cfg)?;
    let outputs = vec![
        families.country_table(&m).write(&cfg.out_dir, "countries", cfg.format)?,
        families.product_table(&m).write(&cfg.out_dir, "products", cfg.format)?,
    ];
    let report = MetricsReport {
        command: "metrics",
        version: VERSION,
        input,
        config: cfg,
        matrix: &summary,
        tdi: FamilyStatus::of(&families.tdi),
        tsi: FamilyStatus::of(&families.tsi),
        eci_pci: FamilyStatus::of(&families.eci_pci),
        eigen: families.eci_pci.as_ref().ok().map(|r| &r.report),
        fitness: FitnessStatus::of(&families),
        outputs,
    };
    format::write_json(&cfg.out_dir.join("report.json"), &report)?;

    say(
        out,
        format!(
            "{} countries, {} products after pruning ({} and {} dropped)",
            summary.countries,
            summary.products,
            summary.dropped_countries.len(),
            summary.dropped_products.len()
        ),
    );
    let failures = families.failures();
    for (name, e) in &failures {
        say(out, format!("{name}: failed: {e}"));
    }
    if failures.is_empty() {
        say(out, format!("all metrics computed -> {}", cfg.out_dir.display()));
        Ok(())
    } else {
        Err(CliError::Partial(failures))
    }
}

#[derive(Debug, Serialize)]
struct SimulationReport<'a> {
    command: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    mode: SimulationMode,
    countries: usize,
    products: usize,
    entries: usize,
    /// Sum of product weights: the estimated number of coherent tech sets.
    weighted_products: f64,
    expected_products: f64,
    predicted_mean_sophistication: f64,
    predicted_std_sophistication: f64,
    predicted_mode_sophistication: usize,
    outputs: Vec<PathBuf>,
}

pub fn simulate(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let params = ModelParams::new(cfg.tau, cfg.max_techs)?;
    let mode = match cfg.mode {
        Mode::Exact => SimulationMode::Exact,
        Mode::Mc => SimulationMode::MonteCarlo { samples: cfg.samples },
    };
    let world = simulate_world(&params, mode, cfg.seed)?;
    let m = &world.matrix;
    create_out_dir(cfg)?;

    let matrix_path = cfg.out_dir.join("synthetic_matrix.txt");
    format::write_file(&matrix_path, &format::to_canonical(&MatrixFile::Binary(m.clone()))?)?;

    let mut countries = Table::new(&["label", "k", "d", "weighted_d", "expected_d"]);
    for (k, label) in m.country_labels().iter().enumerate() {
        let weighted: f64 = m.row(k).iter().map(|&j| world.product_weights[j]).sum();
        countries.push(vec![
            label.as_str().into(),
            k.into(),
            m.diversification()[k].into(),
            weighted.into(),
            params.expected_diversification(k)?.into(),
        ]);
    }

    let world_dist = params.world_distribution();
    let conditional = params.conditional_distribution(cfg.max_techs)?;
    let per_country = world.sophistication_histogram(Counting::PerCountry);
    let distinct = world.sophistication_histogram(Counting::Distinct);
    let mut hist = Table::new(&[
        "s",
        "predicted_world",
        "empirical_per_country",
        "empirical_distinct",
        "predicted_conditional_k_max",
    ]);
    for s in 0..=cfg.max_techs {
        hist.push(vec![
            s.into(),
            world_dist.probabilities[s].into(),
            per_country[s].into(),
            distinct[s].into(),
            conditional[s].into(),
        ]);
    }

    let outputs = vec![
        matrix_path,
        countries.write(&cfg.out_dir, "synthetic_countries", cfg.format)?,
        hist.write(&cfg.out_dir, "sophistication", cfg.format)?,
    ];
    let report = SimulationReport {
        command: "simulate",
        version: VERSION,
        config: cfg,
        mode,
        countries: m.n_countries(),
        products: m.n_products(),
        entries: m.n_entries(),
        weighted_products: world.product_weights.iter().sum(),
        expected_products: params.expected_diversification(cfg.max_techs)?,
        predicted_mean_sophistication: world_dist.mean,
        predicted_std_sophistication: world_dist.std,
        predicted_mode_sophistication: world_dist.mode(),
        outputs,
    };
    format::write_json(&cfg.out_dir.join("simulation.json"), &report)?;
    say(
        out,
        format!(
            "simulated {} countries x {} products (tau={}, K={}, seed={}) -> {}",
            m.n_countries(),
            m.n_products(),
            cfg.tau,
            cfg.max_techs,
            cfg.seed,
            cfg.out_dir.display()
        ),
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct ValidationReport<'a> {
    command: &'static str,
    version: &'static str,
    matrix_input: InputInfo,
    income_input: InputInfo,
    config: &'a RunConfig,
    matrix: &'a MatrixSummary,
    warnings: Vec<String>,
    regressions: &'a RegressionReport,
    /// Exponential fit to the product complexity Q.
    q_exponential_fit: Option<ExponentialFit>,
    outputs: Vec<PathBuf>,
}

pub fn validate(matrix: &Path, income_csv: &Path, cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let (matrix_input, _) = InputInfo::read(matrix)?;
    let (income_input, _) = InputInfo::read(income_csv)?;
    let file = format::read_matrix(matrix)?;
    let panel = format::read_income_csv(income_csv)?;
    let (m, summary) = prepare(&file, cfg)?;
    let families = Families::compute(&m, cfg);

    let tdi = families.tdi.clone()?;
    let tsi = families.tsi.clone()?;
    let EciPci { eci, pci, .. } = families.eci_pci.clone()?;
    let mut warnings = Vec::new();
    let fc = match (&families.fitness, families.fitness_values()) {
        (Ok(o), _) => o.clone(),
        (Err(e), Some(last)) => {
            warnings.push(format!("fitness: {e}; using the last iterate"));
            last.clone()
        }
        (Err(e), None) => return Err(e.clone().into()),
    };
    let countries = CountryMetrics {
        country_labels: m.country_labels().to_vec(),
        diversification: m.diversification().to_vec(),
        tdi,
        eci,
        fitness: fc.fitness,
    };
    let products = ProductMetrics {
        product_labels: m.product_labels().to_vec(),
        ubiquity: m.ubiquity().to_vec(),
        tsi,
        pci,
        q: fc.complexity,
    };
    let regressions = run_income_regressions(&m, &panel, &countries, &products)?;
    for (name, pair) in [
        ("rank_gdp", &regressions.rank_gdp),
        ("log_gdp", &regressions.log_gdp),
        ("eci_on_tdi", &regressions.eci_on_tdi),
        ("fitness_on_dlogd", &regressions.fitness_on_dlogd),
    ] {
        if let Some(e) = &pair.error {
            warnings.push(format!("{name}: {e}"));
        }
    }

    create_out_dir(cfg)?;
    let outputs = scatter_tables(&m, &panel, &regressions, &countries, &products)
        .into_iter()
        .map(|(stem, table)| table.write(&cfg.out_dir, stem, cfg.format))
        .collect::<Result<Vec<_>>>()?;
    let report = ValidationReport {
        command: "validate",
        version: VERSION,
        matrix_input,
        income_input,
        config: cfg,
        matrix: &summary,
        warnings,
        regressions: &regressions,
        q_exponential_fit: fit_exponential(&products.q).ok(),
        outputs,
    };
    format::write_json(&cfg.out_dir.join("validation.json"), &report)?;

    let join = &regressions.join;
    say(
        out,
        format!(
            "joined {} countries ({} only in matrix, {} only in panel)",
            join.matched.len(),
            join.unmatched_matrix.len(),
            join.unmatched_panel.len()
        ),
    );
    if let Some(r) = &regressions.spearman_gdp_diversification {
        say(out, format!("spearman(gdp, d) = {:.4}", r.statistic));
    }
    for w in &report.warnings {
        say(out, format!("warning: {w}"));
    }
    Ok(())
}

fn scatter_tables(
    m: &BinaryMatrix,
    panel: &ecomplexity_core::IncomePanel,
    regressions: &RegressionReport,
    countries: &CountryMetrics,
    products: &ProductMetrics,
) -> Vec<(&'static str, Table)> {
    let idx = &regressions.join.indices;
    let d: Vec<f64> = idx.iter().map(|&(i, _)| m.diversification()[i] as f64).collect();
    let gdp: Vec<f64> = idx.iter().map(|&(_, j)| panel.gdp()[j]).collect();
    let rents: Vec<f64> = idx.iter().map(|&(_, j)| panel.natural_rents()[j]).collect();
    let (rd, rg, rr) = (rank_transform(&d, true), rank_transform(&gdp, true), rank_transform(&rents, true));

    let mut rank = Table::new(&["country", "gdp_rank", "d_rank", "rents_rank"]);
    let mut log = Table::new(&["country", "ln_gdp", "ln_d", "ln_rents_offset"]);
    for (row, label) in regressions.join.matched.iter().enumerate() {
        rank.push(vec![label.as_str().into(), rg[row].into(), rd[row].into(), rr[row].into()]);
        log.push(vec![
            label.as_str().into(),
            gdp[row].ln().into(),
            d[row].ln().into(),
            regressions.rents_offset.map(|delta| (rents[row] + delta).ln()).into(),
        ]);
    }

    let dlogd: Vec<f64> = m.diversification().iter().map(|&x| x as f64 * (x as f64).ln()).collect();
    let mean_dlogd = dlogd.iter().sum::<f64>() / dlogd.len() as f64;
    let mut country_metrics = Table::new(&["country", "d", "tdi", "eci", "fitness", "dlogd_scaled"]);
    for (i, label) in countries.country_labels.iter().enumerate() {
        country_metrics.push(vec![
            label.as_str().into(),
            countries.diversification[i].into(),
            countries.tdi[i].into(),
            countries.eci[i].into(),
            countries.fitness[i].into(),
            (dlogd[i] / mean_dlogd).into(),
        ]);
    }
    let mut product_metrics = Table::new(&["product", "u", "tsi", "pci", "q"]);
    for (j, label) in products.product_labels.iter().enumerate() {
        product_metrics.push(vec![
            label.as_str().into(),
            products.ubiquity[j].into(),
            products.tsi[j].into(),
            products.pci[j].into(),
            products.q[j].into(),
        ]);
    }
    vec![
        ("scatter_rank", rank),
        ("scatter_log", log),
        ("scatter_country_metrics", country_metrics),
        ("scatter_product_metrics", product_metrics),
    ]
}

#[derive(Debug, Serialize)]
struct TauReport<'a> {
    command: &'static str,
    version: &'static str,
    input: InputInfo,
    column: &'a str,
    config: &'a RunConfig,
    estimate: &'a TauEstimate,
}

pub fn fit_tau(metrics_csv: &Path, column: &str, cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let (input, _) = InputInfo::read(metrics_csv)?;
    let scores = format::read_column(metrics_csv, column)?;
    let estimate = estimate_tau(&scores, cfg.max_techs)?;
    create_out_dir(cfg)?;
    let mut table = Table::new(&["s", "z", "model_pmf", "model_cdf", "empirical_cdf"]);
    for row in &estimate.table {
        table.push(vec![row.s.into(), row.z.into(), row.model_pmf.into(), row.model_cdf.into(), row.empirical_cdf.into()]);
    }
    table.write(&cfg.out_dir, "tau_cdf", cfg.format)?;
    let report = TauReport { command: "fit-tau", version: VERSION, input, column, config: cfg, estimate: &estimate };
    format::write_json(&cfg.out_dir.join("tau.json"), &report)?;
    say(
        out,
        format!(
            "tau_hat = {:.3} (KS distance {:.4}, n = {}, K = {})",
            estimate.tau_hat, estimate.ks_distance, estimate.n, estimate.max_techs
        ),
    );
    Ok(())
}
