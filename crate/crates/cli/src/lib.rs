//! Configuration, report generation and subcommand logic behind `fogplace`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use fogplace_core::catalog::{validate_catalog, Capacity, DeviceCatalog, DeviceSpec, Sharing};
use fogplace_core::energy::{evaluate, EnergyBreakdown, EnergyOptions};
use fogplace_core::oracle::{equivalence_check, random_instances, OracleInstance};
use fogplace_core::placement::{
    export_lp, formulate, infeasible_family, solve, MilpModel, Mode, ModelOptions, Optimality, PlacementSolution,
};
use fogplace_core::scenario::{scenario_table, Scenario, ScenarioParams};
use fogplace_core::topology::{analysed_uplink_share, build_gpon, link_hc_capacity, GponParams, Topology};
use fogplace_core::{default_catalog, Error as CoreError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Infeasible(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Topology(_) | CoreError::Scenario(_) | CoreError::Catalog(_) => CliError::Config(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

macro_rules! internal_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::from(CoreError::from(e))
            }
        }
    )*};
}
internal_from!(
    fogplace_core::topology::TopologyError,
    fogplace_core::scenario::ScenarioError,
    fogplace_core::energy::EnergyError,
    fogplace_core::placement::PlacementError
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Partial override of one catalog entry; unset fields keep the default.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceOverride {
    pub p_max: Option<f64>,
    pub capacity: Option<Capacity>,
    pub idle_fraction: Option<f64>,
    pub sharing: Option<Sharing>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Overrides keyed by device class.
    pub catalog: BTreeMap<String, DeviceOverride>,
    pub hc_share: Option<f64>,
    pub gpon: GponParams,
    /// Shared scenario parameters; `pat_max` comes from the list below.
    pub scenario: ScenarioParams,
    /// One scenario per entry, named S1, S2, ... in this order.
    pub pat_max: Vec<u32>,
    pub modes: Vec<Mode>,
    pub energy: EnergyOptions,
    pub idle_activation: bool,
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            catalog: BTreeMap::new(),
            hc_share: None,
            gpon: GponParams::default(),
            scenario: ScenarioParams::default(),
            pat_max: vec![50, 100, 150, 200],
            modes: Mode::ALL.to_vec(),
            energy: EnergyOptions::default(),
            idle_activation: true,
            format: Format::Csv,
            out: None,
        }
    }
}

/// Everything a subcommand needs, built once from a config.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub catalog: DeviceCatalog,
    pub topology: Topology,
    pub uplink_share: f64,
    pub scenarios: Vec<(String, ScenarioParams)>,
    pub modes: Vec<Mode>,
    pub options: ModelOptions,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.pat_max.is_empty() {
            return Err(CliError::Config("pat_max: at least one scenario is required".into()));
        }
        if self.modes.is_empty() {
            return Err(CliError::Config("modes: at least one mode is required".into()));
        }
        self.resolve().map(|_| ())
    }

    pub fn build_catalog(&self) -> Result<DeviceCatalog, CliError> {
        let mut catalog = default_catalog();
        if let Some(share) = self.hc_share {
            catalog.hc_share = share;
        }
        for (class, o) in &self.catalog {
            let spec = match catalog.get(class) {
                Some(base) => {
                    let mut spec = base.clone();
                    if let Some(sharing) = o.sharing {
                        spec.sharing = sharing;
                        spec.idle_fraction = sharing.default_idle_fraction();
                    }
                    spec
                }
                None => match (o.p_max, o.sharing) {
                    (Some(p_max), Some(sharing)) => DeviceSpec::new(class, p_max, o.capacity, sharing),
                    _ => {
                        return Err(CliError::Config(format!(
                            "catalog.{class}: new device classes need p_max and sharing"
                        )))
                    }
                },
            };
            let spec = DeviceSpec {
                p_max: o.p_max.unwrap_or(spec.p_max),
                capacity: o.capacity.or(spec.capacity),
                idle_fraction: o.idle_fraction.unwrap_or(spec.idle_fraction),
                ..spec
            };
            catalog.insert(spec);
        }
        if let Some(v) = validate_catalog(&catalog).first() {
            return Err(CliError::Config(format!("catalog.{}: {}", v.class, v.rule)));
        }
        Ok(catalog)
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let catalog = self.build_catalog()?;
        let topology = build_gpon(&self.gpon, &catalog).map_err(|e| CliError::Config(format!("gpon: {e}")))?;
        let uplink_share = analysed_uplink_share(&topology, &catalog);
        let scenarios = self
            .pat_max
            .iter()
            .enumerate()
            .map(|(i, &pat_max)| {
                let params = ScenarioParams {
                    pat_max,
                    n_patients: self.gpon.n_patients,
                    ..self.scenario.clone()
                };
                Scenario::derive(params.clone(), uplink_share)
                    .map_err(|e| CliError::Config(format!("scenario S{}: {e}", i + 1)))?;
                Ok((format!("S{}", i + 1), params))
            })
            .collect::<Result<_, CliError>>()?;
        Ok(Resolved {
            catalog,
            topology,
            uplink_share,
            scenarios,
            modes: self.modes.clone(),
            options: ModelOptions {
                energy: self.energy,
                idle_activation: self.idle_activation,
            },
        })
    }

    /// Hash of the fully defaulted config, output path excluded.
    pub fn sha256(&self) -> String {
        let canonical = RunConfig {
            out: None,
            ..self.clone()
        };
        let text = serde_json::to_string(&canonical).expect("config serialises");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let config: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Six significant digits, plain decimal notation, no trailing zeros.
pub fn fmt6(x: f64) -> String {
    if !x.is_finite() {
        return String::new();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.5e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let point = exp + 1;
    let mut out = String::new();
    if point <= 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-point) as usize));
        out.push_str(&digits);
    } else if point as usize >= digits.len() {
        out.push_str(&digits);
        out.extend(std::iter::repeat_n('0', point as usize - digits.len()));
    } else {
        out.push_str(&digits[..point as usize]);
        out.push('.');
        out.push_str(&digits[point as usize..]);
    }
    if out.contains('.') {
        let trimmed = out.trim_end_matches('0').trim_end_matches('.');
        out = trimmed.to_string();
    }
    if negative {
        out.insert(0, '-');
    }
    out
}

/// Exact decimal sum of two numbers as printed.
pub fn decimal_sum(a: &str, b: &str) -> String {
    fn parse(s: &str) -> (i128, u32) {
        let negative = s.starts_with('-');
        let s = s.trim_start_matches('-');
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        let v: i128 = format!("{int}{frac}").parse().unwrap_or(0);
        (if negative { -v } else { v }, frac.len() as u32)
    }
    let ((va, da), (vb, db)) = (parse(a), parse(b));
    let d = da.max(db);
    let sum = va * 10i128.pow(d - da) + vb * 10i128.pow(d - db);
    let negative = sum < 0;
    let digits = format!("{:0>width$}", sum.unsigned_abs(), width = d as usize + 1);
    let (int, frac) = digits.split_at(digits.len() - d as usize);
    let mut out = if frac.is_empty() {
        int.to_string()
    } else {
        format!("{int}.{frac}")
    };
    if out.contains('.') {
        out = out.trim_end_matches('0').trim_end_matches('.').to_string();
    }
    if negative {
        out.insert(0, '-');
    }
    out
}

fn header(config: &RunConfig) -> String {
    format!("# config_sha256={}\n", config.sha256())
}

fn json_text(value: serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(&value).expect("json");
    s.push('\n');
    s
}

pub fn run_derive(config: &RunConfig) -> Result<String, CliError> {
    let r = config.resolve_for_derive()?;
    let params: Vec<ScenarioParams> = r.iter().map(|(_, p)| p.clone()).collect();
    let share = config.uplink_share()?;
    let rows = scenario_table(&params, share).map_err(|e| CliError::Config(e.to_string()))?;
    match config.format {
        Format::Csv => {
            let mut out = header(config);
            out.push_str("scenario,pat_max,t_pa_s,t_t_s,r_ps_kbps,r_cloud_kbps,t_cloud_s\n");
            for ((id, _), row) in r.iter().zip(&rows) {
                let _ = writeln!(
                    out,
                    "{id},{},{},{},{},{},{}",
                    row.pat_max,
                    fmt6(row.t_pa),
                    fmt6(row.t_t),
                    fmt6(row.r_ps / 1e3),
                    fmt6(row.r_cloud / 1e3),
                    fmt6(row.t_cloud)
                );
            }
            Ok(out)
        }
        Format::Json => {
            let rows: Vec<_> = r
                .iter()
                .zip(&rows)
                .map(|((id, _), row)| {
                    json!({
                        "scenario": id,
                        "pat_max": row.pat_max,
                        "t_pa_s": row.t_pa,
                        "t_t_s": row.t_t,
                        "r_ps_kbps": row.r_ps / 1e3,
                        "r_cloud_kbps": row.r_cloud / 1e3,
                        "t_cloud_s": row.t_cloud,
                        "display": row.display(),
                    })
                })
                .collect();
            Ok(json_text(json!({ "config_sha256": config.sha256(), "rows": rows })))
        }
    }
}

impl RunConfig {
    fn resolve_for_derive(&self) -> Result<Vec<(String, ScenarioParams)>, CliError> {
        Ok(self
            .pat_max
            .iter()
            .enumerate()
            .map(|(i, &pat_max)| {
                (
                    format!("S{}", i + 1),
                    ScenarioParams {
                        pat_max,
                        n_patients: self.gpon.n_patients,
                        ..self.scenario.clone()
                    },
                )
            })
            .collect())
    }

    fn uplink_share(&self) -> Result<f64, CliError> {
        let catalog = self.build_catalog()?;
        let topology = build_gpon(&self.gpon, &catalog).map_err(|e| CliError::Config(format!("gpon: {e}")))?;
        Ok(analysed_uplink_share(&topology, &catalog))
    }
}

/// Picks a scenario by id (`S2`, `s2` or `2`).
pub fn find_scenario<'a>(resolved: &'a Resolved, id: &str) -> Result<&'a (String, ScenarioParams), CliError> {
    let index = id
        .trim_start_matches(['S', 's'])
        .parse::<usize>()
        .ok()
        .and_then(|n| n.checked_sub(1));
    index
        .and_then(|i| resolved.scenarios.get(i))
        .ok_or_else(|| {
            CliError::Config(format!(
                "unknown scenario `{id}` (have S1..S{})",
                resolved.scenarios.len()
            ))
        })
}

/// One solved (scenario, mode) cell with its energy breakdown.
#[derive(Debug, Clone)]
pub struct Cell {
    pub scenario: String,
    pub solution: PlacementSolution,
    pub energy: EnergyBreakdown,
}

fn model_for(resolved: &Resolved, params: &ScenarioParams, mode: Mode) -> Result<MilpModel, CliError> {
    let scenario = Scenario::derive(params.clone(), resolved.uplink_share)?;
    Ok(formulate(&resolved.topology, &scenario, mode, &resolved.catalog, &resolved.options)?)
}

pub fn solve_cell(resolved: &Resolved, id: &str, params: &ScenarioParams, mode: Mode) -> Result<Cell, CliError> {
    let model = model_for(resolved, params, mode)?;
    let solution = solve(&model)?;
    if solution.optimality == Optimality::Infeasible {
        return Err(CliError::Infeasible(format!(
            "{id} {mode}: no placement satisfies {}",
            infeasible_family(&model)
        )));
    }
    let energy = evaluate(
        model.topology(),
        model.scenario(),
        &solution.placement,
        model.catalog(),
        &resolved.options.energy,
    )?;
    Ok(Cell {
        scenario: id.to_string(),
        solution,
        energy,
    })
}

pub fn run_solve(config: &RunConfig, scenario: &str, mode: Mode) -> Result<String, CliError> {
    let resolved = config.resolve()?;
    let (id, params) = find_scenario(&resolved, scenario)?;
    let cell = solve_cell(&resolved, id, params, mode)?;
    let sol = &cell.solution;
    let mut rows: Vec<(String, u32, u32)> = sol.summary();
    if mode == Mode::Ca {
        rows.push((
            resolved.topology.name(resolved.topology.content_server).to_string(),
            sol.cloud_servers,
            resolved.topology.n_patients(),
        ));
    }
    match config.format {
        Format::Csv => {
            let mut out = header(config);
            let _ = writeln!(
                out,
                "# scenario={id} mode={mode} pat_max={} objective_j={} optimality={:?}",
                sol.pat_max,
                fmt6(sol.objective_j),
                sol.optimality
            );
            out.push_str("site,servers,patients\n");
            for (site, servers, patients) in rows {
                let _ = writeln!(out, "{site},{servers},{patients}");
            }
            Ok(out)
        }
        Format::Json => {
            let summary: Vec<_> = rows
                .iter()
                .map(|(site, servers, patients)| json!({"site": site, "servers": servers, "patients": patients}))
                .collect();
            Ok(json_text(json!({
                "config_sha256": config.sha256(),
                "scenario": id,
                "solution": sol,
                "summary": summary,
                "energy": cell.energy,
            })))
        }
    }
}

/// Solves every (scenario, mode) cell; order follows the config.
pub fn compare_cells(config: &RunConfig) -> Result<Vec<Cell>, CliError> {
    let resolved = config.resolve()?;
    let jobs: Vec<(&String, &ScenarioParams, Mode)> = resolved
        .scenarios
        .iter()
        .flat_map(|(id, p)| resolved.modes.iter().map(move |&m| (id, p, m)))
        .collect();
    jobs.par_iter()
        .map(|&(id, p, m)| solve_cell(&resolved, id, p, m))
        .collect()
}

pub fn run_compare(config: &RunConfig) -> Result<String, CliError> {
    let cells = compare_cells(config)?;
    let total = |id: &str, mode: Mode| {
        cells
            .iter()
            .find(|c| c.scenario == id && c.solution.mode() == mode)
            .map(|c| c.energy.total_j)
    };
    let pct = |x: f64, base: f64| 100.0 * (base - x) / base;
    let rows: Vec<_> = cells
        .iter()
        .map(|c| {
            let mode = c.solution.mode();
            let saving = (mode != Mode::Ca)
                .then(|| total(&c.scenario, Mode::Ca))
                .flatten()
                .map(|ca| pct(c.energy.total_j, ca));
            let delta = (mode == Mode::Mfa)
                .then(|| total(&c.scenario, Mode::Sfa))
                .flatten()
                .map(|sfa| pct(c.energy.total_j, sfa));
            (c, mode, saving, delta)
        })
        .collect();

    match config.format {
        Format::Csv => {
            let mut out = header(config);
            out.push_str("scenario,mode,network_j,processing_j,total_j,saving_vs_ca_pct,mfa_vs_sfa_pct\n");
            for (c, mode, saving, delta) in rows {
                let network = fmt6(c.energy.network_j);
                let processing = fmt6(c.energy.processing_j);
                let total = decimal_sum(&network, &processing);
                let _ = writeln!(
                    out,
                    "{},{mode},{network},{processing},{total},{},{}",
                    c.scenario,
                    saving.map(fmt6).unwrap_or_default(),
                    delta.map(fmt6).unwrap_or_default()
                );
            }
            Ok(out)
        }
        Format::Json => {
            let rows: Vec<_> = rows
                .into_iter()
                .map(|(c, mode, saving, delta)| {
                    json!({
                        "scenario": c.scenario,
                        "mode": mode,
                        "network_j": c.energy.network_j,
                        "processing_j": c.energy.processing_j,
                        "total_j": c.energy.total_j,
                        "saving_vs_ca_pct": saving,
                        "mfa_vs_sfa_pct": delta,
                        "servers": c.solution.servers_total(),
                        "cloud_servers": c.solution.cloud_servers,
                    })
                })
                .collect();
            Ok(json_text(json!({ "config_sha256": config.sha256(), "rows": rows })))
        }
    }
}

pub fn run_dump_topology(config: &RunConfig) -> Result<String, CliError> {
    let resolved = config.resolve()?;
    let t = &resolved.topology;
    match config.format {
        Format::Csv => {
            let mut out = header(config);
            out.push_str("from,to,capacity_bps,hc_capacity_bps\n");
            for l in &t.links {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    t.name(l.from),
                    t.name(l.to),
                    fmt6(l.capacity),
                    fmt6(link_hc_capacity(l, &resolved.catalog))
                );
            }
            Ok(out)
        }
        Format::Json => {
            let nodes: Vec<_> = t
                .nodes
                .iter()
                .map(|n| json!({"name": n.name, "device_class": n.device_class, "layer": n.layer}))
                .collect();
            let links: Vec<_> = t
                .links
                .iter()
                .map(|l| {
                    json!({
                        "from": t.name(l.from),
                        "to": t.name(l.to),
                        "capacity_bps": l.capacity,
                        "hc_capacity_bps": link_hc_capacity(l, &resolved.catalog),
                    })
                })
                .collect();
            Ok(json_text(json!({
                "config_sha256": config.sha256(),
                "patients_per_ap": t.patients_per_ap,
                "nodes": nodes,
                "links": links,
            })))
        }
    }
}

pub fn run_export_lp(config: &RunConfig, scenario: &str, mode: Mode) -> Result<String, CliError> {
    if mode == Mode::Ca {
        return Err(CliError::Config("the all-cloud approach has no decision variables to export".into()));
    }
    let resolved = config.resolve()?;
    let (_, params) = find_scenario(&resolved, scenario)?;
    let model = model_for(&resolved, params, mode)?;
    Ok(format!("\\ config_sha256={}\n{}", config.sha256(), export_lp(&model)))
}

pub fn run_oracle_check(config: &RunConfig, seed: u64, instances: usize) -> Result<String, CliError> {
    let catalog = config.build_catalog()?;
    let options = ModelOptions {
        energy: config.energy,
        idle_activation: config.idle_activation,
    };
    let suite: Vec<OracleInstance> = random_instances(seed, instances)
        .into_iter()
        .map(|i| OracleInstance {
            catalog: catalog.clone(),
            options,
            ..i
        })
        .collect();
    let report = equivalence_check(&suite);
    let text = match config.format {
        Format::Csv => {
            let mut out = header(config);
            out.push_str("instance,passed,solver_objective_j,oracle_objective_j,solver_servers,oracle_servers,detail\n");
            let join = |v: &[u32]| v.iter().map(u32::to_string).collect::<Vec<_>>().join(" ");
            for o in &report.outcomes {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    o.index,
                    o.passed,
                    o.solver_objective.map(fmt6).unwrap_or_default(),
                    o.oracle_objective.map(fmt6).unwrap_or_default(),
                    join(&o.solver_servers),
                    join(&o.oracle_servers),
                    o.detail.replace(',', ";")
                );
            }
            out
        }
        Format::Json => json_text(json!({
            "config_sha256": config.sha256(),
            "seed": seed,
            "passed": report.passed(),
            "outcomes": report.outcomes,
        })),
    };
    match report.first_failure() {
        None => Ok(text),
        Some(f) => Err(CliError::Internal(format!(
            "solver and oracle disagree on instance {} ({})\n{text}",
            f.index, f.detail
        ))),
    }
}

/// Writes to `path`, or stdout when none is given.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt6(5.295), "5.295");
        assert_eq!(fmt6(234.705), "234.705");
        assert_eq!(fmt6(1_920_000.0 / 234.705 / 1e3), "8.18048");
        assert_eq!(fmt6(4.6875), "4.6875");
        assert_eq!(fmt6(27.0336), "27.0336");
        assert_eq!(fmt6(9.999996), "10");
        assert_eq!(fmt6(1_234_567.0), "1234570");
        assert_eq!(fmt6(0.000123456789), "0.000123457");
        assert_eq!(fmt6(-2.5), "-2.5");
        assert_eq!(fmt6(0.0), "0");
        assert_eq!(fmt6(f64::NAN), "");
    }

    #[test]
    fn printed_sums_are_exact() {
        assert_eq!(decimal_sum("4892.51", "1234.5"), "6127.01");
        assert_eq!(decimal_sum("0.1", "0.2"), "0.3");
        assert_eq!(decimal_sum("1234570", "0.5"), "1234570.5");
        assert_eq!(decimal_sum("1.5", "2.5"), "4");
    }

    #[test]
    fn defaults_from_empty_object() {
        let c = parse_config("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        let r = c.resolve().unwrap();
        assert_eq!(r.topology.aps.len(), 32);
        assert_eq!(r.topology.n_patients(), 200);
        assert_eq!(r.scenarios.len(), 4);
        assert_eq!(r.modes.len(), 3);
    }

    #[test]
    fn unknown_keys_are_named() {
        let e = parse_config(r#"{"bogus": 1}"#).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("bogus"), "{e}");
        let e = parse_config(r#"{"gpon": {"n_ap": 3}}"#).unwrap_err();
        assert!(e.to_string().contains("n_ap"), "{e}");
        let e = parse_config("{\n  \"gpon\": [}").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
    }

    #[test]
    fn catalog_overrides_apply() {
        let c = parse_config(r#"{"catalog": {"OLT": {"p_max": 40}}, "hc_share": 0.01}"#).unwrap();
        let cat = c.build_catalog().unwrap();
        assert_eq!(cat.get("OLT").unwrap().p_max, 40.0);
        assert_eq!(cat.get("OLT").unwrap().idle_fraction, 0.9);
        assert_eq!(cat.hc_share, 0.01);
        assert!(parse_config(r#"{"catalog": {"toaster": {"p_max": 1}}}"#).is_err());
        assert!(parse_config(r#"{"catalog": {"OLT": {"idle_fraction": 2}}}"#).is_err());
    }

    #[test]
    fn empty_lists_rejected() {
        assert!(parse_config(r#"{"pat_max": []}"#).is_err());
        assert!(parse_config(r#"{"modes": []}"#).is_err());
        assert!(parse_config(r#"{"pat_max": [5000]}"#).is_err());
    }

    #[test]
    fn hash_ignores_output_path() {
        let a = RunConfig::default();
        let b = RunConfig {
            out: Some("x.csv".into()),
            ..RunConfig::default()
        };
        assert_eq!(a.sha256(), b.sha256());
        let c = RunConfig {
            pat_max: vec![50],
            ..RunConfig::default()
        };
        assert_ne!(a.sha256(), c.sha256());
        assert_eq!(a.sha256().len(), 64);
    }

    #[test]
    fn derive_without_scenarios_is_header_only() {
        let c = RunConfig {
            pat_max: vec![],
            ..RunConfig::default()
        };
        let out = run_derive(&c).unwrap();
        assert_eq!(out.lines().count(), 2);
        assert!(out.lines().nth(1).unwrap().starts_with("scenario,pat_max"));
    }
}
