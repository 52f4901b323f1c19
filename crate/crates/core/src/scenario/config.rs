//! Scenario documents: a TOML schema check that reports every problem at
//! once, then typed access and per-kind requirements.

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::circuit::{
    DisorderSpec, DisorderTarget, JunctionParams, ResonatorParams, UnitCellParams, MAX_SIGMA_REL,
};
use crate::fwm::PumpSettings;
use crate::reference::{calibrate, reference_cell, CalibrationTargets};

/// Upper bound on the number of grid points in one sweep.
pub const MAX_GRID_POINTS: usize = 1_000_000;
pub const MAX_ENSEMBLE: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    /// Dotted path of the offending field, e.g. `sweep.step_hz`.
    pub path: String,
    pub kind: IssueKind,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    Syntax,
    UnknownKey,
    Type,
    Missing,
    Invariant,
}

impl Issue {
    fn new(path: impl Into<String>, kind: IssueKind, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            kind,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Dispersion,
    Sparams,
    StopbandMc,
    Gain,
    Noise,
    Calibrate,
    PowerSweep,
    Imd,
}

impl SweepKind {
    pub const ALL: [&'static str; 8] = [
        "dispersion",
        "sparams",
        "stopband_mc",
        "gain",
        "noise",
        "calibrate",
        "power_sweep",
        "imd",
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Dispersion => "dispersion",
            SweepKind::Sparams => "sparams",
            SweepKind::StopbandMc => "stopband_mc",
            SweepKind::Gain => "gain",
            SweepKind::Noise => "noise",
            SweepKind::Calibrate => "calibrate",
            SweepKind::PowerSweep => "power_sweep",
            SweepKind::Imd => "imd",
        }
    }

    fn needs_frequency_grid(self) -> bool {
        matches!(
            self,
            SweepKind::Dispersion | SweepKind::Sparams | SweepKind::StopbandMc | SweepKind::Gain
        )
    }

    fn needs_power_grid(self) -> bool {
        matches!(self, SweepKind::PowerSweep | SweepKind::Imd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Swept {
    Signal,
    Pump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub seed: u64,
    pub device: DeviceConfig,
    pub disorder: Option<DisorderConfig>,
    pub pump: Option<PumpConfig>,
    pub sweep: SweepConfig,
    #[serde(default)]
    pub io: IoConfig,
    #[serde(default)]
    pub chain: ChainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub cell_count: u64,
    pub preset: Option<String>,
    pub design: Option<DesignConfig>,
    pub cell: Option<CellConfig>,
}

/// Component values solved from design targets, see [`calibrate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub z_line_ohm: f64,
    pub critical_current_a: f64,
    pub junctions_per_cell: u64,
    pub plasma_frequency_hz: f64,
    pub pole_frequency_hz: f64,
    pub c_coupling_f: f64,
    pub c_res_f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub critical_current_a: f64,
    pub junction_capacitance_f: f64,
    pub junctions_per_cell: u64,
    pub c_res_f: f64,
    pub l_res_h: f64,
    pub c_coupling_f: f64,
    pub c_ground_f: f64,
    pub series_resistance_ohm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderConfig {
    pub sigma_rel: f64,
    pub target: Option<DisorderTarget>,
    pub ensemble: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpConfig {
    pub frequency_hz: f64,
    pub power_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub kind: SweepKind,
    pub start_hz: Option<f64>,
    pub stop_hz: Option<f64>,
    pub step_hz: Option<f64>,
    pub threshold_db: Option<f64>,
    pub signal_hz: Option<f64>,
    pub swept: Option<Swept>,
    pub power_start_dbm: Option<f64>,
    pub power_stop_dbm: Option<f64>,
    pub power_step_db: Option<f64>,
    pub f1_hz: Option<f64>,
    pub f2_hz: Option<f64>,
    pub max_order: Option<u64>,
    pub phase_threshold_deg: Option<f64>,
    pub rabi_convention: Option<f64>,
    pub fit_starts: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoConfig {
    pub output_dir: Option<String>,
    pub input: Option<String>,
    pub inputs: Option<Vec<String>>,
    pub package: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub z_ref_ohm: Option<f64>,
    pub system_noise_quanta: Option<f64>,
    pub g_sys_db: Option<f64>,
    pub twpa_gain_db: Option<f64>,
}

impl ScenarioConfig {
    pub fn z_ref(&self) -> f64 {
        self.chain.z_ref_ohm.unwrap_or(50.0)
    }

    /// The nominal cell described by the device section.
    pub fn cell(&self) -> UnitCellParams {
        let d = &self.device;
        if let Some(g) = &d.design {
            calibrate(&CalibrationTargets {
                z_line: g.z_line_ohm,
                critical_current: g.critical_current_a,
                count_per_cell: g.junctions_per_cell as u32,
                plasma_frequency: g.plasma_frequency_hz,
                pole_frequency: g.pole_frequency_hz,
                c_coupling: g.c_coupling_f,
                c_res: g.c_res_f,
            })
        } else if let Some(c) = &d.cell {
            UnitCellParams {
                junctions: JunctionParams {
                    critical_current: c.critical_current_a,
                    self_capacitance: c.junction_capacitance_f,
                    count_per_cell: c.junctions_per_cell as u32,
                },
                resonator: ResonatorParams {
                    c_res: c.c_res_f,
                    l_res: c.l_res_h,
                    c_coupling: c.c_coupling_f,
                },
                c_ground: c.c_ground_f,
                series_resistance: c.series_resistance_ohm.unwrap_or(0.0),
            }
        } else {
            reference_cell()
        }
    }

    pub fn pump_settings(&self) -> Option<PumpSettings> {
        self.pump.as_ref().map(|p| PumpSettings {
            frequency: p.frequency_hz,
            input_power: p.power_dbm,
        })
    }

    /// Disorder for ensemble member `index`, seeded from the scenario seed.
    pub fn disorder_spec(&self, seed: u64, index: u64) -> DisorderSpec {
        let d = self.disorder.as_ref();
        DisorderSpec {
            sigma_rel: d.map_or(0.0, |d| d.sigma_rel),
            target: d
                .and_then(|d| d.target)
                .unwrap_or(DisorderTarget::ResonatorCRes),
            seed: crate::circuit::derive_seed(seed, &format!("disorder/{index}")),
        }
    }

    pub fn ensemble_size(&self) -> u64 {
        match &self.disorder {
            Some(d) if d.sigma_rel > 0.0 => d.ensemble.unwrap_or(100),
            _ => 1,
        }
    }

    pub fn frequency_grid(&self) -> Vec<f64> {
        let s = &self.sweep;
        match (s.start_hz, s.stop_hz, s.step_hz) {
            (Some(a), Some(b), Some(h)) => crate::network::linear_grid(a, b, h),
            _ => Vec::new(),
        }
    }

    pub fn power_grid(&self) -> Vec<f64> {
        let s = &self.sweep;
        match (s.power_start_dbm, s.power_stop_dbm, s.power_step_db) {
            (Some(a), Some(b), Some(h)) => crate::network::linear_grid(a, b, h),
            _ => Vec::new(),
        }
    }
}

// ---- schema ----

#[derive(Clone, Copy)]
enum Ty {
    Float,
    UInt,
    Str,
    Choice(&'static [&'static str]),
    StrArray,
    Table(&'static [(&'static str, Ty)]),
}

const DESIGN: &[(&str, Ty)] = &[
    ("z_line_ohm", Ty::Float),
    ("critical_current_a", Ty::Float),
    ("junctions_per_cell", Ty::UInt),
    ("plasma_frequency_hz", Ty::Float),
    ("pole_frequency_hz", Ty::Float),
    ("c_coupling_f", Ty::Float),
    ("c_res_f", Ty::Float),
];

const CELL: &[(&str, Ty)] = &[
    ("critical_current_a", Ty::Float),
    ("junction_capacitance_f", Ty::Float),
    ("junctions_per_cell", Ty::UInt),
    ("c_res_f", Ty::Float),
    ("l_res_h", Ty::Float),
    ("c_coupling_f", Ty::Float),
    ("c_ground_f", Ty::Float),
    ("series_resistance_ohm", Ty::Float),
];

const DEVICE: &[(&str, Ty)] = &[
    ("cell_count", Ty::UInt),
    ("preset", Ty::Choice(&["reference"])),
    ("design", Ty::Table(DESIGN)),
    ("cell", Ty::Table(CELL)),
];

const DISORDER: &[(&str, Ty)] = &[
    ("sigma_rel", Ty::Float),
    (
        "target",
        Ty::Choice(&["resonator_c_res", "junction_critical_current", "c_ground"]),
    ),
    ("ensemble", Ty::UInt),
];

const PUMP: &[(&str, Ty)] = &[("frequency_hz", Ty::Float), ("power_dbm", Ty::Float)];

const SWEEP: &[(&str, Ty)] = &[
    ("kind", Ty::Choice(&SweepKind::ALL)),
    ("start_hz", Ty::Float),
    ("stop_hz", Ty::Float),
    ("step_hz", Ty::Float),
    ("threshold_db", Ty::Float),
    ("signal_hz", Ty::Float),
    ("swept", Ty::Choice(&["signal", "pump"])),
    ("power_start_dbm", Ty::Float),
    ("power_stop_dbm", Ty::Float),
    ("power_step_db", Ty::Float),
    ("f1_hz", Ty::Float),
    ("f2_hz", Ty::Float),
    ("max_order", Ty::UInt),
    ("phase_threshold_deg", Ty::Float),
    ("rabi_convention", Ty::Float),
    ("fit_starts", Ty::UInt),
];

const IO: &[(&str, Ty)] = &[
    ("output_dir", Ty::Str),
    ("input", Ty::Str),
    ("inputs", Ty::StrArray),
    ("package", Ty::Str),
];

const CHAIN: &[(&str, Ty)] = &[
    ("z_ref_ohm", Ty::Float),
    ("system_noise_quanta", Ty::Float),
    ("g_sys_db", Ty::Float),
    ("twpa_gain_db", Ty::Float),
];

const ROOT: &[(&str, Ty)] = &[
    ("seed", Ty::UInt),
    ("device", Ty::Table(DEVICE)),
    ("disorder", Ty::Table(DISORDER)),
    ("pump", Ty::Table(PUMP)),
    ("sweep", Ty::Table(SWEEP)),
    ("io", Ty::Table(IO)),
    ("chain", Ty::Table(CHAIN)),
];

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

fn type_name(v: &Value) -> &'static str {
    v.type_str()
}

/// Checks keys and value types, converting integers in float slots in place.
/// Offending keys are removed so the remainder can still be checked.
fn check_table(table: &mut Table, schema: &[(&str, Ty)], prefix: &str, issues: &mut Vec<Issue>) {
    let keys: Vec<String> = table.keys().cloned().collect();
    for key in keys {
        let path = join(prefix, &key);
        let Some(&(_, ty)) = schema.iter().find(|(k, _)| *k == key) else {
            let known: Vec<&str> = schema.iter().map(|(k, _)| *k).collect();
            issues.push(Issue::new(
                path,
                IssueKind::UnknownKey,
                format!("unknown key; expected one of {}", known.join(", ")),
            ));
            table.remove(&key);
            continue;
        };
        let v = table.get_mut(&key).expect("key listed above");
        if !check_value(v, ty, &path, issues) {
            table.remove(&key);
        }
    }
}

fn check_value(v: &mut Value, ty: Ty, path: &str, issues: &mut Vec<Issue>) -> bool {
    let before = issues.len();
    let bad = |want: &str, v: &Value| {
        Issue::new(
            path,
            IssueKind::Type,
            format!("expected {want}, found {}", type_name(v)),
        )
    };
    match ty {
        Ty::Float => match v {
            Value::Float(_) => {}
            Value::Integer(i) => *v = Value::Float(*i as f64),
            _ => issues.push(bad("a number", v)),
        },
        Ty::UInt => match v {
            Value::Integer(i) if *i >= 0 => {}
            Value::Integer(i) => issues.push(Issue::new(
                path,
                IssueKind::Type,
                format!("expected a non-negative integer, found {i}"),
            )),
            _ => issues.push(bad("a non-negative integer", v)),
        },
        Ty::Str => {
            if !v.is_str() {
                issues.push(bad("a string", v));
            }
        }
        Ty::Choice(choices) => match v.as_str() {
            Some(s) if choices.contains(&s) => {}
            Some(s) => issues.push(Issue::new(
                path,
                IssueKind::Type,
                format!("{s:?} is not one of {}", choices.join(", ")),
            )),
            None => issues.push(bad("a string", v)),
        },
        Ty::StrArray => match v.as_array() {
            Some(a) if a.iter().all(Value::is_str) => {}
            _ => issues.push(bad("an array of strings", v)),
        },
        Ty::Table(schema) => match v.as_table_mut() {
            // a table with bad entries stays, minus those entries
            Some(t) => {
                check_table(t, schema, path, issues);
                return true;
            }
            None => issues.push(bad("a table", v)),
        },
    }
    issues.len() == before
}

/// Full-document validation. Returns the typed config when there are no
/// issues, otherwise every issue found.
pub fn parse_config(text: &str) -> std::result::Result<ScenarioConfig, Vec<Issue>> {
    let mut table: Table = match text.parse() {
        Ok(t) => t,
        Err(e) => {
            return Err(vec![Issue::new(
                "",
                IssueKind::Syntax,
                e.to_string().trim().to_string(),
            )])
        }
    };
    let mut issues = Vec::new();
    check_table(&mut table, ROOT, "", &mut issues);
    for (key, _) in ROOT {
        let required = matches!(*key, "device" | "sweep");
        if required && !table.contains_key(*key) && !issues.iter().any(|i| i.path == *key) {
            issues.push(Issue::new(*key, IssueKind::Missing, "required section"));
        }
    }
    require(&table, "device", &["cell_count"], &mut issues);
    require(&table, "sweep", &["kind"], &mut issues);
    require(&table, "pump", &["frequency_hz", "power_dbm"], &mut issues);
    require(&table, "disorder", &["sigma_rel"], &mut issues);
    if let Some(Value::Table(dev)) = table.get("device") {
        require(&table, "device.design", &keys(DESIGN), &mut issues);
        let cell_keys: Vec<&str> = keys(CELL)
            .into_iter()
            .filter(|k| *k != "series_resistance_ohm")
            .collect();
        require(&table, "device.cell", &cell_keys, &mut issues);
        let sources = ["preset", "design", "cell"]
            .iter()
            .filter(|k| dev.contains_key(**k))
            .count();
        let dropped = ["device.preset", "device.design", "device.cell"]
            .iter()
            .any(|p| issues.iter().any(|i| i.path == *p));
        if sources != 1 && !dropped {
            issues.push(Issue::new(
                "device",
                IssueKind::Invariant,
                format!("exactly one of preset, design, cell is required, found {sources}"),
            ));
        }
    }
    // Keys dropped by the schema check may leave the document incomplete;
    // semantic checks only run when it still deserializes.
    let cfg: Option<ScenarioConfig> = Value::Table(table).try_into().ok();
    match cfg {
        Some(cfg) => {
            for issue in check_semantics(&cfg) {
                if !issues.iter().any(|i| i.path == issue.path) {
                    issues.push(issue);
                }
            }
            if issues.is_empty() {
                Ok(cfg)
            } else {
                Err(issues)
            }
        }
        None if issues.is_empty() => Err(vec![Issue::new(
            "",
            IssueKind::Type,
            "document does not describe a scenario",
        )]),
        None => Err(issues),
    }
}

fn keys(schema: &[(&'static str, Ty)]) -> Vec<&'static str> {
    schema.iter().map(|(k, _)| *k).collect()
}

fn lookup<'a>(table: &'a Table, path: &str) -> Option<&'a Table> {
    let mut t = table;
    for part in path.split('.') {
        t = t.get(part)?.as_table()?;
    }
    Some(t)
}

/// Missing keys inside `section`, if the section is present.
fn require(table: &Table, section: &str, fields: &[&str], issues: &mut Vec<Issue>) {
    if let Some(t) = lookup(table, section) {
        for f in fields {
            let path = join(section, f);
            if !t.contains_key(*f) && !issues.iter().any(|i| i.path == path) {
                issues.push(Issue::new(path, IssueKind::Missing, "required field"));
            }
        }
    }
}

struct Checker {
    issues: Vec<Issue>,
}

impl Checker {
    fn check(&mut self, ok: bool, path: &str, message: impl Into<String>) {
        if !ok {
            self.issues
                .push(Issue::new(path, IssueKind::Invariant, message));
        }
    }

    fn positive(&mut self, v: f64, path: &str) {
        self.check(
            v > 0.0 && v.is_finite(),
            path,
            format!("must be > 0, got {v}"),
        );
    }

    fn non_negative(&mut self, v: f64, path: &str) {
        self.check(
            v >= 0.0 && v.is_finite(),
            path,
            format!("must be >= 0, got {v}"),
        );
    }

    fn finite(&mut self, v: f64, path: &str) {
        self.check(v.is_finite(), path, format!("must be finite, got {v}"));
    }

    fn missing(&mut self, present: bool, path: &str, why: &str) {
        if !present {
            self.issues
                .push(Issue::new(path, IssueKind::Missing, why.to_string()));
        }
    }

    fn grid(&mut self, start: f64, stop: f64, step: f64, paths: [&str; 3]) {
        self.finite(start, paths[0]);
        self.check(stop > start, paths[1], format!("must exceed {}", paths[0]));
        self.positive(step, paths[2]);
        if step > 0.0 && stop > start {
            let n = (stop - start) / step + 1.0;
            self.check(
                n <= MAX_GRID_POINTS as f64,
                paths[2],
                format!("grid of {n:.0} points exceeds {MAX_GRID_POINTS}"),
            );
        }
    }
}

fn check_semantics(cfg: &ScenarioConfig) -> Vec<Issue> {
    let mut c = Checker { issues: Vec::new() };
    let d = &cfg.device;
    c.check(d.cell_count >= 1, "device.cell_count", "must be >= 1");
    c.check(
        d.cell_count <= 100_000,
        "device.cell_count",
        "must be <= 100000",
    );
    if let Some(g) = &d.design {
        c.positive(g.z_line_ohm, "device.design.z_line_ohm");
        c.positive(g.critical_current_a, "device.design.critical_current_a");
        c.check(
            g.junctions_per_cell >= 1 && g.junctions_per_cell <= 1000,
            "device.design.junctions_per_cell",
            "must be in 1..=1000",
        );
        c.positive(g.plasma_frequency_hz, "device.design.plasma_frequency_hz");
        c.positive(g.pole_frequency_hz, "device.design.pole_frequency_hz");
        c.non_negative(g.c_coupling_f, "device.design.c_coupling_f");
        c.non_negative(g.c_res_f, "device.design.c_res_f");
        c.check(
            g.c_coupling_f + g.c_res_f > 0.0,
            "device.design.c_res_f",
            "c_res_f + c_coupling_f must be > 0",
        );
    }
    if let Some(k) = &d.cell {
        c.positive(k.critical_current_a, "device.cell.critical_current_a");
        c.non_negative(
            k.junction_capacitance_f,
            "device.cell.junction_capacitance_f",
        );
        c.check(
            k.junctions_per_cell >= 1 && k.junctions_per_cell <= 1000,
            "device.cell.junctions_per_cell",
            "must be in 1..=1000",
        );
        c.non_negative(k.c_res_f, "device.cell.c_res_f");
        c.non_negative(k.l_res_h, "device.cell.l_res_h");
        c.non_negative(k.c_coupling_f, "device.cell.c_coupling_f");
        c.positive(k.c_ground_f, "device.cell.c_ground_f");
        if let Some(r) = k.series_resistance_ohm {
            c.non_negative(r, "device.cell.series_resistance_ohm");
        }
    }
    if c.issues.is_empty() {
        if let Err(e) = cfg.cell().validate() {
            c.check(false, "device", e.to_string());
        }
    }
    if let Some(dis) = &cfg.disorder {
        c.check(
            dis.sigma_rel >= 0.0 && dis.sigma_rel < MAX_SIGMA_REL,
            "disorder.sigma_rel",
            format!("must be in [0, {MAX_SIGMA_REL}), got {}", dis.sigma_rel),
        );
        if let Some(n) = dis.ensemble {
            c.check(
                (1..=MAX_ENSEMBLE).contains(&n),
                "disorder.ensemble",
                format!("must be in 1..={MAX_ENSEMBLE}"),
            );
        }
    }
    if let Some(p) = &cfg.pump {
        c.positive(p.frequency_hz, "pump.frequency_hz");
        c.finite(p.power_dbm, "pump.power_dbm");
    }
    if let Some(z) = cfg.chain.z_ref_ohm {
        c.positive(z, "chain.z_ref_ohm");
    }
    if let Some(n) = cfg.chain.system_noise_quanta {
        c.non_negative(n, "chain.system_noise_quanta");
    }
    for (v, p) in [
        (cfg.chain.g_sys_db, "chain.g_sys_db"),
        (cfg.chain.twpa_gain_db, "chain.twpa_gain_db"),
    ] {
        if let Some(v) = v {
            c.finite(v, p);
        }
    }

    let s = &cfg.sweep;
    let kind = s.kind;
    if kind.needs_frequency_grid() {
        c.missing(
            s.start_hz.is_some(),
            "sweep.start_hz",
            "required for this kind",
        );
        c.missing(
            s.stop_hz.is_some(),
            "sweep.stop_hz",
            "required for this kind",
        );
        c.missing(
            s.step_hz.is_some(),
            "sweep.step_hz",
            "required for this kind",
        );
        if let (Some(a), Some(b), Some(h)) = (s.start_hz, s.stop_hz, s.step_hz) {
            c.grid(
                a,
                b,
                h,
                ["sweep.start_hz", "sweep.stop_hz", "sweep.step_hz"],
            );
            c.positive(a, "sweep.start_hz");
        }
    }
    if kind.needs_power_grid() {
        c.missing(
            s.power_start_dbm.is_some(),
            "sweep.power_start_dbm",
            "required for this kind",
        );
        c.missing(
            s.power_stop_dbm.is_some(),
            "sweep.power_stop_dbm",
            "required for this kind",
        );
        c.missing(
            s.power_step_db.is_some(),
            "sweep.power_step_db",
            "required for this kind",
        );
        if let (Some(a), Some(b), Some(h)) = (s.power_start_dbm, s.power_stop_dbm, s.power_step_db)
        {
            c.grid(
                a,
                b,
                h,
                [
                    "sweep.power_start_dbm",
                    "sweep.power_stop_dbm",
                    "sweep.power_step_db",
                ],
            );
        }
    }
    let needs_pump = match kind {
        SweepKind::Gain | SweepKind::PowerSweep | SweepKind::Imd => true,
        SweepKind::Noise => cfg.chain.twpa_gain_db.is_none(),
        _ => false,
    };
    if needs_pump {
        c.missing(cfg.pump.is_some(), "pump", "required for this kind");
    }
    match kind {
        SweepKind::StopbandMc => {
            if let Some(t) = s.threshold_db {
                c.check(t < 0.0, "sweep.threshold_db", "must be < 0");
            }
        }
        SweepKind::Gain => {
            if let Some(t) = s.threshold_db {
                c.finite(t, "sweep.threshold_db");
            }
        }
        SweepKind::PowerSweep => {
            c.missing(
                s.signal_hz.is_some(),
                "sweep.signal_hz",
                "required for this kind",
            );
            if let Some(f) = s.signal_hz {
                c.positive(f, "sweep.signal_hz");
            }
            if let Some(t) = s.phase_threshold_deg {
                c.positive(t, "sweep.phase_threshold_deg");
            }
        }
        SweepKind::Imd => {
            c.missing(s.f1_hz.is_some(), "sweep.f1_hz", "required for this kind");
            c.missing(s.f2_hz.is_some(), "sweep.f2_hz", "required for this kind");
            if let (Some(a), Some(b)) = (s.f1_hz, s.f2_hz) {
                c.positive(a, "sweep.f1_hz");
                c.positive(b, "sweep.f2_hz");
                c.check(a != b, "sweep.f2_hz", "tones must differ");
            }
            if let Some(m) = s.max_order {
                c.check(
                    matches!(m, 1 | 3 | 5 | 7),
                    "sweep.max_order",
                    "must be one of 1, 3, 5, 7",
                );
            }
        }
        SweepKind::Noise => {
            c.missing(
                cfg.io.input.is_some(),
                "io.input",
                "noise spectra file required",
            );
            c.missing(
                cfg.chain.g_sys_db.is_some(),
                "chain.g_sys_db",
                "required for noise",
            );
        }
        SweepKind::Calibrate => {
            let n = cfg.io.inputs.as_ref().map_or(0, Vec::len);
            c.missing(n > 0, "io.inputs", "at least one qubit dataset required");
            if let Some(r) = s.rabi_convention {
                c.positive(r, "sweep.rabi_convention");
            }
            if let Some(k) = s.fit_starts {
                c.check(
                    (1..=100).contains(&k),
                    "sweep.fit_starts",
                    "must be in 1..=100",
                );
            }
        }
        SweepKind::Dispersion | SweepKind::Sparams => {}
    }
    // keys that have no meaning for the chosen kind are rejected too
    let used: &[&str] = match kind {
        SweepKind::Dispersion => &["start_hz", "stop_hz", "step_hz"],
        SweepKind::Sparams => &["start_hz", "stop_hz", "step_hz"],
        SweepKind::StopbandMc => &["start_hz", "stop_hz", "step_hz", "threshold_db"],
        SweepKind::Gain => &["start_hz", "stop_hz", "step_hz", "threshold_db"],
        SweepKind::Noise => &[],
        SweepKind::Calibrate => &["rabi_convention", "fit_starts"],
        SweepKind::PowerSweep => &[
            "signal_hz",
            "swept",
            "power_start_dbm",
            "power_stop_dbm",
            "power_step_db",
            "phase_threshold_deg",
        ],
        SweepKind::Imd => &[
            "f1_hz",
            "f2_hz",
            "power_start_dbm",
            "power_stop_dbm",
            "power_step_db",
            "max_order",
        ],
    };
    let set = [
        ("start_hz", s.start_hz.is_some()),
        ("stop_hz", s.stop_hz.is_some()),
        ("step_hz", s.step_hz.is_some()),
        ("threshold_db", s.threshold_db.is_some()),
        ("signal_hz", s.signal_hz.is_some()),
        ("swept", s.swept.is_some()),
        ("power_start_dbm", s.power_start_dbm.is_some()),
        ("power_stop_dbm", s.power_stop_dbm.is_some()),
        ("power_step_db", s.power_step_db.is_some()),
        ("f1_hz", s.f1_hz.is_some()),
        ("f2_hz", s.f2_hz.is_some()),
        ("max_order", s.max_order.is_some()),
        ("phase_threshold_deg", s.phase_threshold_deg.is_some()),
        ("rabi_convention", s.rabi_convention.is_some()),
        ("fit_starts", s.fit_starts.is_some()),
    ];
    for (key, present) in set {
        if present && !used.contains(&key) {
            c.issues.push(Issue::new(
                format!("sweep.{key}"),
                IssueKind::UnknownKey,
                format!("not used by kind {}", kind.name()),
            ));
        }
    }
    c.issues
}

#[cfg(test)]
mod tests {
    use super::*;

    const GAIN: &str = r#"
        seed = 3
        [device]
        cell_count = 256
        preset = "reference"
        [pump]
        frequency_hz = 6.688e9
        power_dbm = -73
        [sweep]
        kind = "gain"
        start_hz = 4e9
        stop_hz = 9e9
        step_hz = 50e6
    "#;

    fn paths(text: &str) -> Vec<String> {
        parse_config(text)
            .unwrap_err()
            .into_iter()
            .map(|i| i.path)
            .collect()
    }

    #[test]
    fn reference_config_is_clean() {
        let cfg = parse_config(GAIN).unwrap();
        assert_eq!(cfg.pump_settings().unwrap().input_power, -73.0);
        assert_eq!(cfg.frequency_grid().len(), 101);
    }

    #[test]
    fn all_issues_are_reported_together() {
        let text = GAIN
            .replace("cell_count = 256", "cell_count = -4\nbogus = 1")
            .replace("step_hz = 50e6", "step_hz = \"fast\"");
        let p = paths(&text);
        assert!(p.contains(&"device.cell_count".to_string()));
        assert!(p.contains(&"device.bogus".to_string()));
        assert!(p.contains(&"sweep.step_hz".to_string()));
    }

    #[test]
    fn sigma_bound_is_an_invariant() {
        let text = format!("{GAIN}\n[disorder]\nsigma_rel = 0.5\n");
        let issues = parse_config(&text).unwrap_err();
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].path, "disorder.sigma_rel");
        assert_eq!(issues[0].kind, IssueKind::Invariant);
    }

    #[test]
    fn gain_needs_a_pump() {
        let text = GAIN.replace(
            "[pump]\n        frequency_hz = 6.688e9\n        power_dbm = -73\n",
            "",
        );
        assert_eq!(paths(&text), vec!["pump"]);
    }
}
