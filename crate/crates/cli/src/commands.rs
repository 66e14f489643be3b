use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use cryptodbn::backtest::{prepare, render_text, run_backtest, BacktestConfig, CoinData, FeatureGroup};
use cryptodbn::dbn::{learn_2tbn, prev_name, LearnConfig, TwoSliceBn};
use cryptodbn::ingest::{load_csv, SourceKind};
use cryptodbn::whatif::{parse_evidence_spec, Preset, QueryNode, WhatIfEngine, WhatIfRequest};
use cryptodbn::TimeSeriesTable;

use crate::{CliError, RunConfig};

fn load(path: &Path, kind: SourceKind) -> Result<TimeSeriesTable, CliError> {
    let loaded = load_csv(path, kind).map_err(|e| CliError::Data(format!("ingest: {e}")))?;
    for d in &loaded.diagnostics {
        eprintln!("{d}");
    }
    Ok(loaded.table)
}

pub fn load_coin(config: &RunConfig) -> Result<CoinData, CliError> {
    Ok(CoinData {
        name: config.coin.clone(),
        ohlcv: load(&config.ohlcv, SourceKind::Ohlcv)?,
        macros: config
            .macros
            .iter()
            .map(|p| load(p, SourceKind::Macro))
            .collect::<Result<_, _>>()?,
        tweets: config.tweets.as_deref().map(|p| load(p, SourceKind::Tweets)).transpose()?,
    })
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn create_out(config: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(&config.out).map_err(|e| CliError::Data(format!("{}: {e}", config.out.display())))
}

pub fn model_file_name(group: FeatureGroup) -> String {
    format!("model_g{group}.json")
}

fn model_json(model: &TwoSliceBn) -> Result<String, CliError> {
    let mut json = model.to_json()?;
    json.push('\n');
    Ok(json)
}

/// Parent lists of the transition network plus the persistence arcs.
pub fn structure_summary(model: &TwoSliceBn) -> String {
    let n = model.n_vars();
    let names = &model.variable_names;
    let label = |node: usize| {
        if node < n {
            prev_name(&names[node])
        } else {
            names[node - n].clone()
        }
    };
    let mut out = String::new();
    let _ = writeln!(out, "group {}: {} variables, T = {}", model.feature_group, n, model.t_slices);
    let _ = writeln!(out, "transition parents:");
    for v in 0..n {
        let parents: Vec<String> = model.transition.dag.parents(n + v).iter().map(|&p| label(p)).collect();
        let shown = if parents.is_empty() { "-".to_string() } else { parents.join(", ") };
        let _ = writeln!(out, "  {:<24} <- {shown}", names[v]);
    }
    let inter = model.inter_slice_arcs();
    let _ = writeln!(out, "inter-slice arcs: {}", inter.len());
    for (from, to) in inter {
        let _ = writeln!(out, "  {from} -> {to}");
    }
    let _ = writeln!(out, "prior arcs: {}", model.prior_arcs().len());
    out
}

/// Learns one model per requested group on every aligned row.
pub fn train(config: &RunConfig) -> Result<(), CliError> {
    let coin = load_coin(config)?;
    let bt = BacktestConfig {
        run_baselines: false,
        ..config.backtest_config()
    };
    let data = prepare(&coin, &bt)?;
    for note in &data.notes {
        eprintln!("WARN {note}");
    }
    create_out(config)?;
    for &group in &config.groups {
        let columns = group.columns(data.directions.variables());
        let matrix = data.directions.select(&columns).map_err(|e| CliError::Data(format!("ingest: {e}")))?;
        let learn = LearnConfig {
            feature_group: group.id(),
            ..bt.learn
        };
        let model = learn_2tbn(&matrix, &learn)?;
        let path = config.out.join(model_file_name(group));
        write(&path, &model_json(&model)?)?;
        print!("{}", structure_summary(&model));
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn backtest(config: &RunConfig) -> Result<(), CliError> {
    let coin = load_coin(config)?;
    let mut outcome = run_backtest(&coin, &config.backtest_config())?;
    create_out(config)?;
    for (group, model) in &outcome.models {
        let name = model_file_name(*group);
        write(&config.out.join(&name), &model_json(model)?)?;
        if let Some(g) = outcome.report.groups.iter_mut().find(|g| g.id == group.id()) {
            g.model_path = Some(name);
        }
    }
    let mut json = outcome
        .report
        .to_json()
        .map_err(|e| CliError::Data(format!("report: {e}")))?;
    json.push('\n');
    write(&config.out.join("report.json"), &json)?;
    let text = render_text(&outcome.report);
    write(&config.out.join("report.txt"), &text)?;
    for note in &outcome.report.notes {
        eprintln!("WARN {note}");
    }
    print!("{text}");
    Ok(())
}

fn parse_query(spec: &str) -> Result<QueryNode, CliError> {
    let bad = || CliError::Usage(format!("bad query `{spec}`: expected slice:variable"));
    let (slice, variable) = spec.split_once(':').ok_or_else(bad)?;
    Ok(QueryNode {
        slice: slice.trim().parse().map_err(|_| bad())?,
        variable: variable.trim().to_string(),
    })
}

pub fn load_model(path: &Path) -> Result<TwoSliceBn, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    TwoSliceBn::from_json(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn whatif(
    model: &Path,
    evidence: &str,
    preset: Option<&str>,
    query: Option<&str>,
    json: bool,
) -> Result<(), CliError> {
    let engine = WhatIfEngine::new(load_model(model)?)?;
    let mut items = match preset {
        Some(p) => p.parse::<Preset>().map_err(CliError::Usage)?.evidence(),
        None => Vec::new(),
    };
    items.extend(parse_evidence_spec(evidence).map_err(|e| CliError::Usage(e.to_string()))?);
    let request = WhatIfRequest {
        evidence: items,
        query: query.map(parse_query).transpose()?,
    };
    let response = engine.query(&request)?;
    if json {
        let text = serde_json::to_string_pretty(&response).map_err(|e| CliError::Data(e.to_string()))?;
        println!("{text}");
    } else {
        println!(
            "P({}[{}] = Down) = {:.6}",
            response.query.variable, response.query.slice, response.probabilities.down
        );
        println!(
            "P({}[{}] = Up)   = {:.6}",
            response.query.variable, response.query.slice, response.probabilities.up
        );
        let tie = if response.tie { " (tie)" } else { "" };
        println!("argmax: {}{tie}", response.argmax);
    }
    Ok(())
}
