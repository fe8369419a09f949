//! The staged batch pipeline. Every stage reads the files of earlier stages
//! from the output directory, so stages can be run (and rerun) one at a
//! time; `run` executes all of them in order.
//!
//! Output layout, relative to the output directory:
//!
//! ```text
//! manifest.json                     run manifest
//! summary.json                      state counts, mean correlations, turning points
//! epochs.csv                        epoch windows and their dates
//! ingest/returns.csv                log returns, one row per day, one column per ticker
//! ingest/tickers.csv                row order, sectors, pre-sort row
//! ingest/dropped.csv                tickers dropped for incomplete coverage
//! <kind>/matrices.msmx              epoch matrices (binary container)
//! <kind>/mean_correlation_epochs.csv
//! <kind>/mean_correlation_sliding.csv
//! <kind>/clusters.json              bisecting hierarchy with every split and restart
//! <kind>/centroids.msmx             centroids of the analysed solution, label order
//! <kind>/k_selection.csv            mean child quotient per k
//! <kind>/timeline.csv               state per epoch
//! <kind>/state_table.csv            epochs and mean correlation per state
//! <kind>/turning_points.csv
//! <kind>/typical_states.msmx        typical states (record epoch = state, 0 = all epochs)
//! <kind>/typical_states/*.csv       the same matrices as labelled text
//! <kind>/ari.csv, ari_summary.csv   subset robustness (when enabled)
//! <kind>/figures/*.svg
//! ```

use std::path::{Path, PathBuf};
use std::time::Instant;

use marketstates_core::analysis::{
    build_timeline, robustness_trial, turning_points, typical_states, AriSummary, RobustnessOptions, TypicalStates,
};
use marketstates_core::clustering::{cluster_set, k_selection, MatrixSet};
use marketstates_core::epoch::EpochInfo;
use marketstates_core::ingest::{log_returns, sector_sort};
use marketstates_core::matrices::{epoch_matrices, sliding_point};
use marketstates_core::{CorrelationMatrix, DMatrix, MatrixKind, ReturnMatrix};
use rayon::prelude::*;

use crate::config::LoadedConfig;
use crate::container::{read_container, write_container, MatrixRecord};
use crate::error::{CliError, Result};
use crate::io::{self, fmt_f64, Table};
use crate::manifest::{FileEntry, RunManifest, StageRecord, StageStatus};
use crate::reports::{self, ClusterReport, KindSummary, RunSummary};
use crate::svg::{self, Chart, Marker, PaletteBounds, RowLabel, Series, SeriesStyle, XAxis};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Matrices,
    Cluster,
    SelectK,
    Analyze,
    Robustness,
    Render,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Ingest,
        Stage::Matrices,
        Stage::Cluster,
        Stage::SelectK,
        Stage::Analyze,
        Stage::Robustness,
        Stage::Render,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Matrices => "matrices",
            Stage::Cluster => "cluster",
            Stage::SelectK => "select-k",
            Stage::Analyze => "analyze",
            Stage::Robustness => "robustness",
            Stage::Render => "render",
        }
    }

    fn requires(self) -> &'static [Stage] {
        match self {
            Stage::Ingest => &[],
            Stage::Matrices => &[Stage::Ingest],
            Stage::Cluster => &[Stage::Matrices],
            Stage::SelectK | Stage::Analyze | Stage::Robustness => &[Stage::Cluster],
            Stage::Render => &[Stage::SelectK, Stage::Analyze],
        }
    }

    fn names() -> Vec<&'static str> {
        Stage::ALL.iter().map(|s| s.name()).collect()
    }
}

/// Relative output paths.
pub mod layout {
    use marketstates_core::MatrixKind;

    pub const SUMMARY: &str = "summary.json";
    pub const EPOCHS: &str = "epochs.csv";
    pub const RETURNS: &str = "ingest/returns.csv";
    pub const TICKERS: &str = "ingest/tickers.csv";
    pub const DROPPED: &str = "ingest/dropped.csv";

    pub fn kind_file(kind: MatrixKind, name: &str) -> String {
        format!("{}/{name}", kind.as_str())
    }

    pub fn matrices(kind: MatrixKind) -> String {
        kind_file(kind, "matrices.msmx")
    }

    pub fn series_epochs(kind: MatrixKind) -> String {
        kind_file(kind, "mean_correlation_epochs.csv")
    }

    pub fn series_sliding(kind: MatrixKind) -> String {
        kind_file(kind, "mean_correlation_sliding.csv")
    }

    pub fn clusters(kind: MatrixKind) -> String {
        kind_file(kind, "clusters.json")
    }

    pub const CENTROIDS: &str = "centroids.msmx";

    pub fn k_selection(kind: MatrixKind) -> String {
        kind_file(kind, "k_selection.csv")
    }

    pub fn timeline(kind: MatrixKind) -> String {
        kind_file(kind, "timeline.csv")
    }

    pub fn state_table(kind: MatrixKind) -> String {
        kind_file(kind, "state_table.csv")
    }

    pub fn turning_points(kind: MatrixKind) -> String {
        kind_file(kind, "turning_points.csv")
    }

    pub fn typical_states(kind: MatrixKind) -> String {
        kind_file(kind, "typical_states.msmx")
    }

    pub fn typical_state_csv(kind: MatrixKind, state: Option<usize>) -> String {
        match state {
            Some(s) => kind_file(kind, &format!("typical_states/state_{s}.csv")),
            None => kind_file(kind, "typical_states/all_epochs.csv"),
        }
    }

    pub fn ari(kind: MatrixKind) -> String {
        kind_file(kind, "ari.csv")
    }

    pub fn ari_summary(kind: MatrixKind) -> String {
        kind_file(kind, "ari_summary.csv")
    }

    pub fn figure(kind: MatrixKind, name: &str) -> String {
        kind_file(kind, &format!("figures/{name}.svg"))
    }
}

/// Working state of one stage: where to write, what was written, and the
/// warnings raised.
struct StageContext<'a> {
    cfg: &'a LoadedConfig,
    root: PathBuf,
    outputs: Vec<String>,
    warnings: Vec<String>,
}

impl StageContext<'_> {
    /// Path of an output file, recorded in the manifest.
    fn out(&mut self, rel: &str) -> PathBuf {
        self.outputs.push(rel.to_string());
        self.root.join(rel)
    }

    fn input(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    fn warn(&mut self, message: String) {
        log::warn!("{message}");
        self.warnings.push(message);
    }
}

fn input_entries(cfg: &LoadedConfig) -> Result<Vec<FileEntry>> {
    let mut paths = vec![cfg.prices.clone(), cfg.sectors.clone()];
    paths.extend(cfg.events.clone());
    paths
        .iter()
        .map(|p| FileEntry::of(p, p.display().to_string()))
        .collect()
}

fn remove_outputs(root: &Path, files: impl IntoIterator<Item = String>) {
    for f in files {
        let path = root.join(&f);
        if path.exists() {
            if let Err(e) = std::fs::remove_file(&path) {
                log::warn!("cannot remove stale output {}: {e}", path.display());
            }
        }
    }
}

/// Runs one stage and records it in the manifest.
pub fn run_stage(cfg: &LoadedConfig, stage: Stage) -> Result<RunManifest> {
    let root = cfg.output.clone();
    let previous = RunManifest::load(&root).map_err(|e| e.in_stage(stage.name()))?;
    let mut manifest = if stage == Stage::Ingest {
        if let Some(old) = previous {
            remove_outputs(&root, old.files());
        }
        let inputs = input_entries(cfg).map_err(|e| e.in_stage(stage.name()))?;
        RunManifest::new(&cfg.config, &cfg.digest, inputs)
    } else {
        let m = previous.ok_or_else(|| {
            CliError::config(format!("no manifest in {}; run `ingest` first", root.display())).in_stage(stage.name())
        })?;
        if m.config_digest != cfg.digest {
            return Err(CliError::config(
                "the configuration differs from the one that produced the existing outputs; rerun from `ingest`",
            )
            .in_stage(stage.name()));
        }
        for req in stage.requires() {
            let ok = m.stage(req.name()).is_some_and(|r| r.status == StageStatus::Ok);
            if !ok {
                return Err(CliError::config(format!("stage `{}` has not completed", req.name())).in_stage(stage.name()));
            }
        }
        if let Some(old) = m.stage(stage.name()) {
            remove_outputs(&root, old.outputs.iter().map(|f| f.path.clone()));
        }
        m
    };
    std::fs::create_dir_all(&root).map_err(|e| CliError::io(&root, e).in_stage(stage.name()))?;

    let mut ctx = StageContext {
        cfg,
        root: root.clone(),
        outputs: Vec::new(),
        warnings: Vec::new(),
    };
    let started = Instant::now();
    log::info!("stage {} started", stage.name());
    let result = match stage {
        Stage::Ingest => ingest(&mut ctx),
        Stage::Matrices => matrices(&mut ctx),
        Stage::Cluster => cluster(&mut ctx),
        Stage::SelectK => select_k(&mut ctx),
        Stage::Analyze => analyze(&mut ctx),
        Stage::Robustness => robustness(&mut ctx),
        Stage::Render => render(&mut ctx),
    };
    let seconds = started.elapsed().as_secs_f64();

    let mut names = ctx.outputs.clone();
    names.sort();
    names.dedup();
    let outputs = names
        .into_iter()
        .filter(|n| root.join(n).exists())
        .map(|n| FileEntry::of(&root.join(&n), n))
        .collect::<Result<Vec<_>>>();
    let (status, error) = match (&result, &outputs) {
        (Ok(s), Ok(_)) => (*s, None),
        (Err(e), _) | (_, Err(e)) => (StageStatus::Failed, Some(e.to_string())),
    };
    let record = StageRecord {
        stage: stage.name().to_string(),
        status,
        seconds,
        outputs: outputs.unwrap_or_default(),
        warnings: ctx.warnings,
        error,
    };
    manifest.upsert(record, &Stage::names());
    manifest.save(&root).map_err(|e| e.in_stage(stage.name()))?;
    log::info!("stage {} finished in {seconds:.2} s", stage.name());
    result.map_err(|e| e.in_stage(stage.name()))?;
    Ok(manifest)
}

/// All stages in order; stops at the first failure.
pub fn run_pipeline(cfg: &LoadedConfig) -> Result<RunManifest> {
    let mut manifest = None;
    for stage in Stage::ALL {
        manifest = Some(run_stage(cfg, stage)?);
    }
    Ok(manifest.expect("at least one stage ran"))
}

fn ingest(ctx: &mut StageContext) -> Result<StageStatus> {
    let cfg = ctx.cfg;
    let (table, report) = io::read_prices(&cfg.prices, &cfg.config.prices)?;
    for d in &report.dropped {
        ctx.warn(format!(
            "dropped ticker {}: {} of the common dates missing",
            d.ticker, d.missing_dates
        ));
    }
    let path = ctx.out(layout::DROPPED);
    io::write_drop_report(&path, &report)?;
    let sectors = io::read_sectors(&cfg.sectors)?;
    let returns = sector_sort(&log_returns(&table), &sectors).map_err(|e| CliError::from(e).context(cfg.sectors.display()))?;
    let (rp, tp) = (ctx.out(layout::RETURNS), ctx.out(layout::TICKERS));
    io::write_returns(&rp, &tp, &returns)?;
    log::info!(
        "ingested {} tickers over {} return days",
        returns.num_assets(),
        returns.num_days()
    );
    Ok(StageStatus::Ok)
}

fn load_returns(ctx: &StageContext) -> Result<ReturnMatrix> {
    io::read_returns(&ctx.input(layout::RETURNS), &ctx.input(layout::TICKERS))
}

fn row_labels(ctx: &StageContext) -> Result<Vec<RowLabel>> {
    let (assets, _) = io::read_tickers(&ctx.input(layout::TICKERS))?;
    Ok(assets
        .into_iter()
        .map(|a| RowLabel {
            ticker: a.ticker,
            sector: a.sector,
        })
        .collect())
}

fn matrices(ctx: &mut StageContext) -> Result<StageStatus> {
    let cfg = ctx.cfg;
    let returns = load_returns(ctx)?;
    let length = cfg.config.epochs.length;
    let mut epochs_written = false;
    for kind in cfg.config.kinds() {
        let built = epoch_matrices(&returns, length, kind)?;
        if !epochs_written {
            if built.dropped_days > 0 {
                ctx.warn(format!("{} trailing return days do not fill an epoch and are unused", built.dropped_days));
            }
            let path = ctx.out(layout::EPOCHS);
            io::write_epochs(&path, &built.infos)?;
            epochs_written = true;
        }
        if !built.degenerate_top_epochs.is_empty() {
            ctx.warn(format!(
                "{kind}: top singular value is degenerate in epochs {:?}; the first dyad was removed",
                built.degenerate_top_epochs
            ));
        }
        let records: Vec<MatrixRecord> = built
            .matrices
            .iter()
            .zip(&built.infos)
            .map(|(m, info)| MatrixRecord {
                kind,
                epoch: info.index as u32,
                mid_date: Some(info.mid_date),
                values: m.values.clone(),
            })
            .collect();
        let path = ctx.out(&layout::matrices(kind));
        write_container(&path, &records)?;
        let means = built.mean_correlations();
        let path = ctx.out(&layout::series_epochs(kind));
        io::write_rows(
            &path,
            &["epoch", "date", "mean_correlation"],
            built
                .infos
                .iter()
                .zip(&means)
                .map(|(info, m)| [info.index.to_string(), info.mid_date.to_string(), fmt_f64(*m)]),
        )?;
        if cfg.config.series.sliding && kind.is_correlation() {
            let offsets: Vec<usize> = (1..=returns.num_days() - length + 1).collect();
            let points = offsets
                .par_iter()
                .map(|&o| sliding_point(&returns, o, length, kind))
                .collect::<marketstates_core::Result<Vec<_>>>()
                .map_err(|e| CliError::from(e).context(format!("{kind} sliding window")))?;
            let path = ctx.out(&layout::series_sliding(kind));
            io::write_rows(
                &path,
                &["offset", "date", "mean_correlation"],
                points
                    .iter()
                    .map(|p| [p.offset.to_string(), p.date.to_string(), fmt_f64(p.mean_correlation)]),
            )?;
        }
    }
    Ok(StageStatus::Ok)
}

fn load_set(ctx: &StageContext, kind: MatrixKind, epochs: usize) -> Result<MatrixSet> {
    let path = ctx.input(&layout::matrices(kind));
    let records = read_container(&path)?;
    if records.len() != epochs || records.iter().any(|r| r.kind != kind) {
        return Err(CliError::data(format!(
            "{}: expected {epochs} {kind} matrices, found {}",
            path.display(),
            records.len()
        )));
    }
    let items = records
        .into_iter()
        .map(|r| CorrelationMatrix {
            values: r.values,
            kind,
            epoch: r.epoch as usize,
        })
        .collect();
    Ok(MatrixSet::new(items)?)
}

fn load_epochs(ctx: &StageContext) -> Result<Vec<EpochInfo>> {
    io::read_epochs(&ctx.input(layout::EPOCHS))
}

fn average(set: &MatrixSet, members: &[usize]) -> DMatrix<f64> {
    let k = set.dim();
    let mut sum = DMatrix::zeros(k, k);
    for &m in members {
        sum += &set.items()[m].values;
    }
    sum / members.len() as f64
}

fn cluster(ctx: &mut StageContext) -> Result<StageStatus> {
    let cfg = &ctx.cfg.config;
    let epochs = load_epochs(ctx)?;
    let n = epochs.len();
    let k_max = cfg.clustering.k_max;
    if k_max > n {
        return Err(CliError::config(format!(
            "clustering.k_max = {k_max} exceeds the number of epochs ({n})"
        )));
    }
    for kind in cfg.kinds() {
        let set = load_set(ctx, kind, n)?;
        let result = cluster_set(
            &set,
            k_max,
            cfg.clustering.restarts,
            cfg.seed,
            cfg.clustering.representation.into(),
        )?;
        let k = cfg.clustering.k.get(kind);
        if result.attained_k() < k_max {
            ctx.warn(format!(
                "{kind}: only {} clusters of non-zero width could be formed (k_max = {k_max})",
                result.attained_k()
            ));
        }
        let chosen = k.min(result.attained_k());
        let solution = result.solution(chosen).expect("chosen k is attained");
        let records = solution
            .leaves
            .iter()
            .enumerate()
            .map(|(label, &node)| MatrixRecord {
                kind,
                epoch: label as u32 + 1,
                mid_date: None,
                values: average(&set, &result.nodes[node].members),
            })
            .collect::<Vec<_>>();
        let path = ctx.out(&layout::kind_file(kind, layout::CENTROIDS));
        write_container(&path, &records)?;
        let report = ClusterReport::new(
            kind.as_str(),
            &result,
            cfg.seed,
            cfg.clustering.restarts,
            cfg.clustering.representation,
            chosen,
            layout::CENTROIDS,
        );
        let path = ctx.out(&layout::clusters(kind));
        reports::write_json(&path, &report)?;
    }
    Ok(StageStatus::Ok)
}

fn select_k(ctx: &mut StageContext) -> Result<StageStatus> {
    for kind in ctx.cfg.config.kinds() {
        let report = ClusterReport::read(&ctx.input(&layout::clusters(kind)))?;
        let curve = k_selection(&report.to_result()?);
        if curve.best_k().is_none() {
            ctx.warn(format!("{kind}: the mean child quotient is undefined for every k"));
        }
        let path = ctx.out(&layout::k_selection(kind));
        reports::write_k_selection(&path, &curve)?;
    }
    Ok(StageStatus::Ok)
}

fn write_typical_states(ctx: &mut StageContext, kind: MatrixKind, typical: &TypicalStates) -> Result<()> {
    let labels: Vec<String> = row_labels(ctx)?.into_iter().map(|l| l.ticker).collect();
    let mut records: Vec<MatrixRecord> = typical
        .states
        .iter()
        .map(|s| MatrixRecord {
            kind,
            epoch: s.state as u32,
            mid_date: None,
            values: s.matrix.clone(),
        })
        .collect();
    records.push(MatrixRecord {
        kind,
        epoch: 0,
        mid_date: None,
        values: typical.overall.clone(),
    });
    let path = ctx.out(&layout::typical_states(kind));
    write_container(&path, &records)?;
    for s in &typical.states {
        let path = ctx.out(&layout::typical_state_csv(kind, Some(s.state)));
        io::write_matrix_csv(&path, &s.matrix, &labels)?;
    }
    let path = ctx.out(&layout::typical_state_csv(kind, None));
    io::write_matrix_csv(&path, &typical.overall, &labels)
}

fn analyze(ctx: &mut StageContext) -> Result<StageStatus> {
    let cfg = &ctx.cfg.config;
    let epochs = load_epochs(ctx)?;
    let (assets, _) = io::read_tickers(&ctx.input(layout::TICKERS))?;
    let mut kinds = Vec::new();
    for kind in cfg.kinds() {
        let set = load_set(ctx, kind, epochs.len())?;
        let report = ClusterReport::read(&ctx.input(&layout::clusters(kind)))?;
        let k = cfg.clustering.k.get(kind);
        let labels = report.labels(k)?;
        let timeline = build_timeline(&labels, &epochs)?;
        if timeline.state_count < k {
            ctx.warn(format!(
                "{kind}: {k} states requested but the clustering is degenerate beyond {}",
                timeline.state_count
            ));
        }
        let typical = typical_states(&set, &timeline.states())?;
        let turning = turning_points(&timeline);
        let path = ctx.out(&layout::timeline(kind));
        reports::write_timeline(&path, &timeline)?;
        let path = ctx.out(&layout::state_table(kind));
        reports::write_state_table(&path, &typical)?;
        let path = ctx.out(&layout::turning_points(kind));
        reports::write_turning_points(&path, &turning)?;
        write_typical_states(ctx, kind, &typical)?;
        let suggested = k_selection(&report.to_result()?).best_k();
        kinds.push(KindSummary::new(
            kind.as_str(),
            k,
            timeline.state_count,
            suggested,
            &typical,
            &turning,
        ));
    }
    let first = epochs.first().map_or(0, |e| e.start);
    let used: usize = epochs.iter().map(|e| e.length).sum();
    let returns_days = Table::read(&ctx.input(layout::RETURNS))?.rows.len();
    let summary = RunSummary {
        seed: cfg.seed,
        tickers: assets.len(),
        return_days: returns_days,
        epoch_length: cfg.epochs.length,
        epochs: epochs.len(),
        dropped_days: returns_days.saturating_sub(first + used),
        kinds,
    };
    let path = ctx.out(layout::SUMMARY);
    reports::write_json(&path, &summary)?;
    Ok(StageStatus::Ok)
}

fn robustness(ctx: &mut StageContext) -> Result<StageStatus> {
    let cfg = &ctx.cfg.config;
    let r = &cfg.robustness;
    if !r.enabled {
        return Ok(StageStatus::Skipped);
    }
    let returns = load_returns(ctx)?;
    if let Some(&too_big) = r.subset_sizes.iter().find(|&&s| s > returns.num_assets()) {
        return Err(CliError::config(format!(
            "robustness subset size {too_big} exceeds the {} ingested tickers",
            returns.num_assets()
        )));
    }
    for kind in cfg.robustness_kinds() {
        let report = ClusterReport::read(&ctx.input(&layout::clusters(kind)))?;
        let k = cfg.clustering.k.get(kind);
        let reference = report.labels(k)?;
        let options = RobustnessOptions {
            epoch_length: cfg.epochs.length,
            kind,
            k,
            restarts: cfg.clustering.restarts,
            seed: cfg.seed,
            representation: cfg.clustering.representation.into(),
            max_attempts: r.max_attempts,
        };
        let jobs: Vec<(usize, usize)> = r
            .subset_sizes
            .iter()
            .flat_map(|&s| (0..r.repetitions).map(move |rep| (s, rep)))
            .collect();
        let trials = jobs
            .par_iter()
            .map(|&(size, rep)| robustness_trial(&returns, &reference, &options, size, rep))
            .collect::<marketstates_core::Result<Vec<_>>>()?;
        let redrawn = trials.iter().filter(|t| t.attempts > 1).count();
        if redrawn > 0 {
            ctx.warn(format!(
                "{kind}: {redrawn} subsets were redrawn after a zero-variance ticker"
            ));
        }
        let summaries: Vec<AriSummary> = r
            .subset_sizes
            .iter()
            .map(|&size| {
                let mine = trials.iter().filter(|t| t.subset_size == size).cloned().collect();
                AriSummary::from_trials(size, mine)
            })
            .collect();
        let path = ctx.out(&layout::ari(kind));
        reports::write_ari_trials(&path, &summaries)?;
        let path = ctx.out(&layout::ari_summary(kind));
        reports::write_ari_summary(&path, &summaries)?;
    }
    Ok(StageStatus::Ok)
}

fn parse_dates(table: &Table, column: &str) -> Result<Vec<f64>> {
    table
        .required::<chrono::NaiveDate>(column)
        .map(|v| v.into_iter().map(svg::date_x).collect())
}

fn write_svg(ctx: &mut StageContext, rel: &str, text: &str) -> Result<()> {
    let path = ctx.out(rel);
    let mut f = io::create(&path)?;
    std::io::Write::write_all(&mut f, text.as_bytes()).map_err(|e| CliError::io(&path, e))?;
    std::io::Write::flush(&mut f).map_err(|e| CliError::io(&path, e))
}

fn render(ctx: &mut StageContext) -> Result<StageStatus> {
    let cfg = &ctx.cfg.config;
    if !cfg.render.enabled {
        return Ok(StageStatus::Skipped);
    }
    let events = match &ctx.cfg.events {
        Some(p) => io::read_events(p)?,
        None => Vec::new(),
    };
    let event_markers: Vec<Marker> = events
        .iter()
        .map(|e| Marker {
            x: svg::date_x(e.date),
            label: e.name.clone(),
            dashed: false,
        })
        .collect();
    let labels = row_labels(ctx)?;
    let manifest = RunManifest::load(&ctx.root)?;
    let robustness_done = manifest
        .as_ref()
        .and_then(|m| m.stage(Stage::Robustness.name()))
        .is_some_and(|s| s.status == StageStatus::Ok);

    for kind in cfg.kinds() {
        // Typical-state heatmaps.
        let records = read_container(&ctx.input(&layout::typical_states(kind)))?;
        let bounds = if kind.is_correlation() {
            PaletteBounds::CORRELATION
        } else {
            PaletteBounds::SymmetricAuto
        };
        for r in &records {
            let (name, title) = match r.epoch {
                0 => ("all_epochs".to_string(), format!("{kind}: average over all epochs")),
                s => (format!("state_{s}"), format!("{kind}: typical state {s}")),
            };
            let text = svg::heatmap(&r.values, &labels, bounds, &title)?;
            write_svg(ctx, &layout::figure(kind, &name), &text)?;
        }

        // Mean correlation series.
        let epochs = Table::read(&ctx.input(&layout::series_epochs(kind)))?;
        let mut series = Vec::new();
        let sliding_path = ctx.input(&layout::series_sliding(kind));
        if sliding_path.exists() {
            let sliding = Table::read(&sliding_path)?;
            series.push(Series {
                name: format!("sliding windows ({} days)", cfg.epochs.length),
                points: parse_dates(&sliding, "date")?
                    .into_iter()
                    .zip(sliding.required::<f64>("mean_correlation")?)
                    .collect(),
                style: SeriesStyle::Line,
            });
        }
        series.push(Series {
            name: "disjoint epochs".into(),
            points: parse_dates(&epochs, "date")?
                .into_iter()
                .zip(epochs.required::<f64>("mean_correlation")?)
                .collect(),
            style: SeriesStyle::Points,
        });
        let text = svg::chart(&Chart {
            title: format!("{kind}: mean correlation"),
            x_label: "date".into(),
            y_label: "mean correlation".into(),
            x_axis: XAxis::Date,
            series,
            markers: event_markers.clone(),
            integer_y: false,
        });
        write_svg(ctx, &layout::figure(kind, "mean_correlation"), &text)?;

        // Selection curve.
        let sel = Table::read(&ctx.input(&layout::k_selection(kind)))?;
        let ks: Vec<f64> = sel.required::<f64>("k")?;
        let curve = |col: &str| -> Result<Vec<(f64, f64)>> {
            Ok(ks
                .iter()
                .zip(sel.parse_column::<f64>(col)?)
                .filter_map(|(&k, v)| v.map(|v| (k, v)))
                .collect())
        };
        let text = svg::chart(&Chart {
            title: format!("{kind}: mean child quotient"),
            x_label: "number of clusters k".into(),
            y_label: "mean quotient".into(),
            x_axis: XAxis::Numeric,
            series: vec![
                Series {
                    name: "divided by contributing clusters".into(),
                    points: curve("mean_quotient")?,
                    style: SeriesStyle::Points,
                },
                Series {
                    name: "divided by k".into(),
                    points: curve("mean_quotient_over_k")?,
                    style: SeriesStyle::Points,
                },
            ],
            markers: Vec::new(),
            integer_y: false,
        });
        write_svg(ctx, &layout::figure(kind, "k_selection"), &text)?;

        // Timeline.
        let tl = Table::read(&ctx.input(&layout::timeline(kind)))?;
        let tp = Table::read(&ctx.input(&layout::turning_points(kind)))?;
        let mut markers = event_markers.clone();
        let new_states = tp.required::<bool>("new_state")?;
        for (x, new) in parse_dates(&tp, "first_date")?.into_iter().zip(new_states) {
            if new {
                markers.push(Marker {
                    x,
                    label: String::new(),
                    dashed: true,
                });
            }
        }
        let text = svg::chart(&Chart {
            title: format!("{kind}: market states"),
            x_label: "date".into(),
            y_label: "state".into(),
            x_axis: XAxis::Date,
            series: vec![Series {
                name: "state of each epoch".into(),
                points: parse_dates(&tl, "date")?
                    .into_iter()
                    .zip(tl.required::<f64>("state")?)
                    .collect(),
                style: SeriesStyle::Points,
            }],
            markers,
            integer_y: true,
        });
        write_svg(ctx, &layout::figure(kind, "timeline"), &text)?;

        // Subset robustness.
        let ari_path = ctx.input(&layout::ari_summary(kind));
        if robustness_done && ari_path.exists() {
            let t = Table::read(&ari_path)?;
            let sizes = t.required::<f64>("K'")?;
            let col = |c: &str| -> Result<Vec<(f64, f64)>> {
                Ok(sizes.iter().copied().zip(t.required::<f64>(c)?).collect())
            };
            let text = svg::chart(&Chart {
                title: format!("{kind}: adjusted Rand index of ticker subsets"),
                x_label: "tickers in subset".into(),
                y_label: "ARI".into(),
                x_axis: XAxis::Numeric,
                series: vec![
                    Series {
                        name: "mean".into(),
                        points: col("mean")?,
                        style: SeriesStyle::Points,
                    },
                    Series {
                        name: "min".into(),
                        points: col("min")?,
                        style: SeriesStyle::Line,
                    },
                    Series {
                        name: "max".into(),
                        points: col("max")?,
                        style: SeriesStyle::Line,
                    },
                ],
                markers: Vec::new(),
                integer_y: false,
            });
            write_svg(ctx, &layout::figure(kind, "ari"), &text)?;
        }
    }
    Ok(StageStatus::Ok)
}
