mod args;
mod svg;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use hitenrich::bands::{band_difference, band_single, Band, BandConfig, BandMethod};
use hitenrich::curves::{
    enrichment_factor_curve, hit_enrichment_curve, reference_curves, CurveEstimate, FractionGrid,
};
use hitenrich::dataset::{load_csv, summarize, LoadOptions, ScoredDataset};
use hitenrich::pointwise::{bh_adjust, compare, ComparisonResult, Method, MethodSpec};
use hitenrich::simulate::{
    band_study_grid, coverage_study, power_study, BandVariant, CoverageTarget, ModelSpec,
    StudyResult,
};
use hitenrich::{Error, Result};

use args::*;

const VERSION: &str = env!("CARGO_PKG_VERSION");

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = serde_json::to_string(&cli).expect("arguments serialize");
    match run(cli, &config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(match err {
                Error::InvalidArgument(_) => 2,
                Error::Schema(_)
                | Error::Parse { .. }
                | Error::DegenerateClasses(_)
                | Error::Io(_)
                | Error::Csv(_) => 3,
                Error::NumericalDegeneracy(_) => 4,
            })
        }
    }
}

fn run(cli: Cli, config: &str) -> Result<()> {
    match cli.command {
        Command::Curve(args) => cmd_curve(args, config),
        Command::Compare(args) => cmd_compare(args, config),
        Command::Bands(args) => cmd_bands(args, config),
        Command::Simulate(args) => match args.study {
            StudyCommand::Power(p) => cmd_power(p, config),
            StudyCommand::Coverage(c) => cmd_coverage(c, config),
        },
    }
}

// ---------------------------------------------------------------------------
// shared plumbing
// ---------------------------------------------------------------------------

fn load(input: &InputArgs) -> Result<ScoredDataset> {
    let mut delim = [0u8; 4];
    let delim = input.delimiter.encode_utf8(&mut delim).as_bytes();
    if delim.len() != 1 {
        return Err(Error::InvalidArgument(
            "delimiter must be a single byte".into(),
        ));
    }
    let active: Vec<String> = input
        .active_label
        .iter()
        .filter(|s| !s.is_empty())
        .cloned()
        .collect();
    let inactive: Vec<String> = input
        .inactive_label
        .iter()
        .filter(|s| !s.is_empty())
        .cloned()
        .collect();
    let options = LoadOptions {
        delimiter: delim[0],
        activity_labels: if active.is_empty() && inactive.is_empty() {
            None
        } else {
            Some((active, inactive))
        },
    };
    let negate: Vec<String> = input
        .negate
        .iter()
        .filter(|s| !s.is_empty())
        .cloned()
        .collect();
    load_csv(
        &input.input,
        &input.activity_col,
        &input.algos,
        &negate,
        &options,
    )
}

fn resolve_grid(grid: &GridArgs, n: usize) -> Result<FractionGrid> {
    match (&grid.grid, &grid.grid_counts) {
        (Some(fractions), _) => FractionGrid::from_fractions(fractions.clone()),
        (None, Some(counts)) => FractionGrid::from_counts(counts, n),
        (None, None) => FractionGrid::log_spaced(40, (1.0 / n as f64).max(1e-6)),
    }
}

fn write_output(out: &Option<String>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)?,
        None => std::io::stdout().write_all(content.as_bytes())?,
    }
    Ok(())
}

fn csv_header(config: &str) -> String {
    format!("# hitenrich {VERSION}\n# config {config}\n")
}

fn json_envelope(config: &str, payload_key: &str, payload: serde_json::Value) -> String {
    let mut doc = serde_json::Map::new();
    doc.insert("version".into(), serde_json::Value::String(VERSION.into()));
    doc.insert(
        "config".into(),
        serde_json::from_str(config).expect("config round-trips"),
    );
    doc.insert(payload_key.into(), payload);
    let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(doc)).unwrap();
    text.push('\n');
    text
}

fn parse_method_specs(names: &[String], pooled: bool, plus: bool) -> Result<Vec<MethodSpec>> {
    names
        .iter()
        .map(|name| {
            let method: Method = name.parse()?;
            if method == Method::McNemar {
                // McNemar is inherently pooled and non-plus
                Ok(MethodSpec::plain(method))
            } else {
                MethodSpec::new(method, pooled, plus)
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// curve
// ---------------------------------------------------------------------------

fn cmd_curve(args: CurveArgs, config: &str) -> Result<()> {
    let ds = load(&args.input)?;
    let summary = summarize(&ds)?;
    let grid = resolve_grid(&args.grid, summary.n)?;

    let mut curves: Vec<CurveEstimate> = Vec::new();
    for algo in &args.input.algos {
        curves.push(hit_enrichment_curve(&ds, algo, &grid)?);
        if args.ef {
            curves.push(enrichment_factor_curve(&ds, algo, &grid)?);
        }
    }
    let (snapped, _) = grid.snap_to(summary.n)?;
    let (ideal, random) = reference_curves(summary.pi_hat, &snapped)?;

    match args.format {
        Format::Csv => {
            let mut out = csv_header(config);
            out.push_str("algorithm,kind,r,n_tested,value\n");
            for curve in curves.iter().chain([&ideal, &random]) {
                let (_, counts) = curve.grid.snap_to(summary.n)?;
                let kind = match curve.kind {
                    hitenrich::curves::CurveKind::Recall => "recall",
                    hitenrich::curves::CurveKind::EnrichmentFactor => "enrichment-factor",
                };
                for ((&r, &k), &v) in curve
                    .grid
                    .fractions()
                    .iter()
                    .zip(&counts)
                    .zip(&curve.values)
                {
                    out.push_str(&format!("{},{kind},{r},{k},{v}\n", curve.algorithm));
                }
            }
            write_output(&args.out, &out)
        }
        Format::Json => {
            let payload = serde_json::json!({
                "pi_hat": summary.pi_hat,
                "n": summary.n,
                "n_plus": summary.n_plus,
                "curves": curves,
                "references": [ideal, random],
            });
            write_output(&args.out, &json_envelope(config, "curve", payload))
        }
        Format::Svg => {
            let mut series: Vec<svg::Series> = curves
                .iter()
                .filter(|c| c.kind == hitenrich::curves::CurveKind::Recall)
                .map(|c| svg::Series {
                    label: c.algorithm.clone(),
                    xs: c.grid.fractions().to_vec(),
                    ys: c.values.clone(),
                    band: None,
                    dashed: false,
                })
                .collect();
            for reference in [&ideal, &random] {
                series.push(svg::Series {
                    label: reference.algorithm.clone(),
                    xs: reference.grid.fractions().to_vec(),
                    ys: reference.values.clone(),
                    band: None,
                    dashed: true,
                });
            }
            let plot = svg::Plot {
                title: "Hit enrichment curves".into(),
                x_label: "testing fraction".into(),
                y_label: "recall".into(),
                series,
                y_range: Some((0.0, 1.0)),
                metadata: format!("hitenrich {VERSION} config {config}"),
            };
            write_output(&args.out, &plot.render())
        }
    }
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

#[derive(serde::Serialize)]
struct PairResult {
    algo1: String,
    algo2: String,
    #[serde(flatten)]
    result: ComparisonResult,
}

fn cmd_compare(args: CompareArgs, config: &str) -> Result<()> {
    if args.input.algos.len() < 2 {
        return Err(Error::InvalidArgument(
            "compare needs at least two score columns".into(),
        ));
    }
    let ds = load(&args.input)?;
    let summary = summarize(&ds)?;
    let grid = resolve_grid(&args.grid, summary.n)?;
    let (snapped, _) = grid.snap_to(summary.n)?;
    let specs = parse_method_specs(&args.methods, args.pooled, args.plus)?;

    let mut pairs: Vec<(String, String)> = Vec::new();
    for i in 0..args.input.algos.len() {
        for j in (i + 1)..args.input.algos.len() {
            pairs.push((args.input.algos[i].clone(), args.input.algos[j].clone()));
        }
    }

    let mut results: Vec<PairResult> = Vec::new();
    for &spec in &specs {
        // family for the false-discovery-rate adjustment: all (pair,
        // fraction) tests of one method, or per fraction across pairs
        let mut block: Vec<PairResult> = Vec::new();
        for &r in snapped.fractions() {
            for (a, b) in &pairs {
                let result = compare(&ds, a, b, r, spec, args.alpha)?;
                block.push(PairResult {
                    algo1: a.clone(),
                    algo2: b.clone(),
                    result,
                });
            }
        }
        match args.bh_scope {
            BhScope::All => {
                let adjusted =
                    bh_adjust(&block.iter().map(|p| p.result.p_raw).collect::<Vec<f64>>());
                for (p, adj) in block.iter_mut().zip(adjusted) {
                    p.result.p_adj = Some(adj);
                }
            }
            BhScope::PerFraction => {
                for &r in snapped.fractions() {
                    let idx: Vec<usize> = block
                        .iter()
                        .enumerate()
                        .filter(|(_, p)| p.result.r == r)
                        .map(|(i, _)| i)
                        .collect();
                    let adjusted = bh_adjust(
                        &idx.iter()
                            .map(|&i| block[i].result.p_raw)
                            .collect::<Vec<f64>>(),
                    );
                    for (&i, adj) in idx.iter().zip(adjusted) {
                        block[i].result.p_adj = Some(adj);
                    }
                }
            }
        }
        results.extend(block);
    }

    match args.format {
        Format::Csv => {
            let mut out = csv_header(config);
            out.push_str(
                "method,pooled,plus,algo1,algo2,r,n_tested,diff,se,z,p_raw,p_adj,ci_lo,ci_hi,flags\n",
            );
            for p in &results {
                let r = &p.result;
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    r.method.method.label(),
                    r.method.pooled,
                    r.method.plus,
                    p.algo1,
                    p.algo2,
                    r.r,
                    r.n_tested,
                    r.diff,
                    r.se,
                    r.z,
                    r.p_raw,
                    r.p_adj.map(|v| v.to_string()).unwrap_or_default(),
                    r.ci.0,
                    r.ci.1,
                    flag_string(&r.flags),
                ));
            }
            write_output(&args.out, &out)
        }
        Format::Json => {
            let payload = serde_json::to_value(&results).unwrap();
            write_output(&args.out, &json_envelope(config, "comparisons", payload))
        }
        Format::Svg => Err(Error::InvalidArgument(
            "compare does not produce svg; use csv or json".into(),
        )),
    }
}

fn flag_string(flags: &hitenrich::pointwise::ComparisonFlags) -> String {
    let mut parts = Vec::new();
    if flags.degenerate_se {
        parts.push("degenerate-se");
    }
    if flags.variance_floored {
        parts.push("variance-floored");
    }
    if flags.cov_ratio_dropped {
        parts.push("cov-ratio-dropped");
    }
    if flags.lambda_fallback {
        parts.push("lambda-fallback");
    }
    parts.join("+")
}

// ---------------------------------------------------------------------------
// bands
// ---------------------------------------------------------------------------

fn cmd_bands(args: BandsArgs, config: &str) -> Result<()> {
    if !args.single && args.diff.is_empty() {
        return Err(Error::InvalidArgument(
            "request --single and/or --diff A,B".into(),
        ));
    }
    let method: BandMethod = args.method.parse()?;
    let ds = load(&args.input)?;
    let summary = summarize(&ds)?;
    let grid = resolve_grid(&args.grid, summary.n)?;
    let band_config = BandConfig {
        method,
        plus: args.plus,
        alpha: args.alpha,
        draws: args.draws,
        seed: args.seed,
    };

    let mut bands: Vec<Band> = Vec::new();
    if args.single {
        for algo in &args.input.algos {
            bands.push(band_single(&ds, algo, &grid, &band_config)?);
        }
    }
    for pair in &args.diff {
        let (a, b) = pair
            .split_once(',')
            .ok_or_else(|| Error::InvalidArgument(format!("--diff wants 'A,B', got '{pair}'")))?;
        bands.push(band_difference(
            &ds,
            a.trim(),
            b.trim(),
            &grid,
            &band_config,
        )?);
    }

    match args.format {
        Format::Csv => {
            let mut out = csv_header(config);
            out.push_str(
                "band,kind,method,plus,alpha,q,seed,draws,r,n_tested,center,lower,upper\n",
            );
            for band in &bands {
                let name = band.algorithms.join("-");
                let kind = match band.kind {
                    hitenrich::bands::BandKind::Single => "single",
                    hitenrich::bands::BandKind::Difference => "difference",
                };
                let method_name = match band.method {
                    BandMethod::SupT => "supt",
                    BandMethod::Bonferroni => "bonferroni",
                };
                for (i, &r) in band.grid.fractions().iter().enumerate() {
                    out.push_str(&format!(
                        "{name},{kind},{method_name},{},{},{},{},{},{r},{},{},{},{}\n",
                        band.plus,
                        band.alpha,
                        band.q,
                        band.seed.map(|s| s.to_string()).unwrap_or_default(),
                        band.mc_draws.map(|d| d.to_string()).unwrap_or_default(),
                        band.counts[i],
                        band.center[i],
                        band.lower[i],
                        band.upper[i],
                    ));
                }
            }
            write_output(&args.out, &out)
        }
        Format::Json => {
            let payload = serde_json::to_value(&bands).unwrap();
            write_output(&args.out, &json_envelope(config, "bands", payload))
        }
        Format::Svg => {
            let single_only = bands
                .iter()
                .all(|b| b.kind == hitenrich::bands::BandKind::Single);
            let series: Vec<svg::Series> = bands
                .iter()
                .map(|b| svg::Series {
                    label: format!("{} (q={:.2})", b.algorithms.join("-"), b.q),
                    xs: b.grid.fractions().to_vec(),
                    ys: b.center.clone(),
                    band: Some((b.lower.clone(), b.upper.clone())),
                    dashed: false,
                })
                .collect();
            let plot = svg::Plot {
                title: if single_only {
                    "Simultaneous confidence bands".into()
                } else {
                    "Simultaneous difference bands".into()
                },
                x_label: "testing fraction".into(),
                y_label: if single_only {
                    "recall".into()
                } else {
                    "recall difference".into()
                },
                series,
                y_range: if single_only { Some((0.0, 1.0)) } else { None },
                metadata: format!("hitenrich {VERSION} config {config}"),
            };
            write_output(&args.out, &plot.render())
        }
    }
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn build_model(model: &ModelArgs) -> ModelSpec {
    match model.family {
        Family::Binormal => {
            ModelSpec::binormal_study(model.rho, model.n, model.pi_plus, model.seed)
        }
        Family::Bibeta => ModelSpec::bibeta_study(model.rho, model.n, model.pi_plus, model.seed),
    }
}

fn default_power_grid(n: usize) -> Vec<usize> {
    [2usize, 5, 10, 30, 50, 100, 300, 500, 1000]
        .into_iter()
        .filter(|&k| k <= n / 10)
        .collect()
}

fn cmd_power(args: PowerArgs, config: &str) -> Result<()> {
    let mut model = build_model(&args.model);
    model.validate()?;
    if let Some(which) = args.null {
        if !(1..=2).contains(&which) {
            return Err(Error::InvalidArgument("--null takes 1 or 2".into()));
        }
        model = model.with_shared_marginals(which - 1)?;
    }
    let specs = parse_method_specs(&args.methods, args.pooled, args.plus)?;
    let counts = args
        .grid_counts
        .clone()
        .unwrap_or_else(|| default_power_grid(args.model.n));
    let result = power_study(
        &model,
        &specs,
        &counts,
        args.model.reps,
        args.model.alpha,
        args.model.seed,
    )?;
    emit_study(&result, args.format, &args.out, config)
}

fn cmd_coverage(args: CoverageArgs, config: &str) -> Result<()> {
    let model = match (args.target, args.case) {
        (Target::BandSingle, Some(case)) => {
            ModelSpec::case(case, args.model.n, args.model.pi_plus, args.model.seed)?
        }
        (Target::BandSingle, None) => {
            return Err(Error::InvalidArgument(
                "--target band-single needs --case 1..5".into(),
            ))
        }
        (_, Some(_)) => {
            return Err(Error::InvalidArgument(
                "--case only applies to --target band-single".into(),
            ))
        }
        (_, None) => build_model(&args.model),
    };
    model.validate()?;

    let target = match args.target {
        Target::PointwiseCi => CoverageTarget::PointwiseCi {
            methods: parse_method_specs(&args.methods, args.pooled, args.plus)?,
        },
        Target::BandSingle | Target::BandDiff => {
            let variants = args
                .band_methods
                .iter()
                .map(|name| {
                    Ok(BandVariant {
                        method: name.parse::<BandMethod>()?,
                        plus: args.plus,
                    })
                })
                .collect::<Result<Vec<BandVariant>>>()?;
            if args.target == Target::BandSingle {
                CoverageTarget::BandSingle {
                    variants,
                    draws: args.draws,
                }
            } else {
                CoverageTarget::BandDiff {
                    variants,
                    draws: args.draws,
                }
            }
        }
    };

    let counts = args
        .grid_counts
        .clone()
        .unwrap_or_else(|| match args.target {
            Target::PointwiseCi => default_power_grid(args.model.n),
            _ => band_study_grid(args.model.n / 10),
        });
    let result = coverage_study(
        &model,
        &target,
        &counts,
        args.model.reps,
        args.model.alpha,
        args.model.seed,
    )?;
    emit_study(&result, args.format, &args.out, config)
}

fn emit_study(
    result: &StudyResult,
    format: Format,
    out: &Option<String>,
    config: &str,
) -> Result<()> {
    match format {
        Format::Csv => {
            let mut text = csv_header(config);
            text.push_str(&format!(
                "# study {} replicates {} redraws {} alpha {} seed {}\n",
                result.study, result.replicates, result.redraws, result.alpha, result.seed
            ));
            text.push_str("label,scope,n_tested,estimate,mc_se,mean_width\n");
            for row in &result.rows {
                if let Some(scalar) = row.scalar {
                    text.push_str(&format!(
                        "{},curve,,{},{},{}\n",
                        row.label,
                        scalar.estimate,
                        scalar.mc_se,
                        scalar.mean_width.map(|w| w.to_string()).unwrap_or_default(),
                    ));
                }
                for (point, &count) in row.points.iter().zip(&result.grid_counts) {
                    text.push_str(&format!(
                        "{},point,{count},{},{},{}\n",
                        row.label,
                        point.estimate,
                        point.mc_se,
                        point.mean_width.map(|w| w.to_string()).unwrap_or_default(),
                    ));
                }
            }
            write_output(out, &text)
        }
        Format::Json => {
            let payload = serde_json::to_value(result).unwrap();
            write_output(out, &json_envelope(config, "study", payload))
        }
        Format::Svg => {
            let series: Vec<svg::Series> = result
                .rows
                .iter()
                .map(|row| svg::Series {
                    label: row.label.clone(),
                    xs: result.grid_counts.iter().map(|&k| k as f64).collect(),
                    ys: row.points.iter().map(|p| p.estimate).collect(),
                    band: Some((
                        row.points
                            .iter()
                            .map(|p| p.estimate - 1.96 * p.mc_se)
                            .collect(),
                        row.points
                            .iter()
                            .map(|p| p.estimate + 1.96 * p.mc_se)
                            .collect(),
                    )),
                    dashed: false,
                })
                .collect();
            let plot = svg::Plot {
                title: format!("{} study", result.study),
                x_label: "number of tests".into(),
                y_label: "estimate".into(),
                series,
                y_range: None,
                metadata: format!("hitenrich {VERSION} config {config}"),
            };
            write_output(out, &plot.render())
        }
    }
}
