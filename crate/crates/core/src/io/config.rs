//! Sectioned TOML run configuration.
//!
//! ```toml
//! [grid]
//! n = 32                 # required, even, >= 4
//! dealias = true
//! dealias_fraction = 0.6666666666666666
//!
//! [model]
//! kind = "leray_deconv"  # nse | leray_deconv | leray_alpha
//! delta = 0.2            # required unless kind = "nse"
//! N = 0
//! filter_forcing = true
//! filter_ic = true
//! max_order = 64
//! advection = "advective" # or "divergence"
//! hn_evaluation = "closed_form" # or "iterative"
//!
//! [fluid]
//! nu = 0.1               # required, >= 0
//!
//! [time]
//! dt = 0.01              # required
//! t_end = 1.0            # required, >= dt
//! snapshot_every = 0     # 0: initial and final state only
//!
//! [ic]                   # kind-specific keys, see FieldSpec
//! kind = "taylor_green"
//! amplitude = 1.0
//!
//! [forcing]
//! kind = "zero"
//!
//! [output]
//! dir = "out"
//! formats = ["csv", "snapshot"]
//!
//! [study]                # used by the sweep commands only
//! deltas = [0.4, 0.2, 0.1]
//! orders = [0, 1, 2, 4, 8]
//! delta = 0.5
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::filtering::{FilterSpec, DEFAULT_MAX_ORDER};
use crate::solver::{AdvectionForm, FieldSpec, HnEvaluation, Manufactured, ModelKind, SolverConfig};
use crate::spectral::{Grid, DEFAULT_DEALIAS_FRACTION};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Snapshot,
}

impl OutputFormat {
    pub fn name(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Snapshot => "snapshot",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub formats: Vec<OutputFormat>,
}

impl OutputConfig {
    pub fn wants(&self, f: OutputFormat) -> bool {
        self.formats.contains(&f)
    }
}

/// Optional sweep parameters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StudySection {
    pub deltas: Option<Vec<f64>>,
    pub orders: Option<Vec<u32>>,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub solver: SolverConfig,
    pub output: OutputConfig,
    pub study: StudySection,
}

/// Parses and validates a configuration file with `key=value` overrides
/// applied on top.
pub fn parse_config(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text, &path.display().to_string(), overrides)
}

/// As [`parse_config`] for in-memory text; `origin` labels parse errors.
pub fn parse_config_str(text: &str, origin: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut table: Table = text.parse().map_err(|e: toml::de::Error| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
            .unwrap_or(0);
        Error::Parse {
            path: origin.to_string(),
            line,
            message: e.message().to_string(),
        }
    })?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    from_table(&table)
}

/// Applies `section.key=value`; the value is read as a TOML value, or as a
/// bare string when that fails.
pub fn apply_override(table: &mut Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::validation(assignment, "override must have the form section.key=value"))?;
    let key = key.trim();
    let (section, name) = key
        .split_once('.')
        .ok_or_else(|| Error::validation(key, "override key must have the form section.key"))?;
    let value = format!("v = {}", raw.trim())
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.trim().to_string()));
    let sec = table
        .entry(section.to_string())
        .or_insert_with(|| Value::Table(Table::new()));
    match sec {
        Value::Table(t) => {
            t.insert(name.to_string(), value);
            Ok(())
        }
        _ => Err(Error::validation(section, "is not a section")),
    }
}

const SECTIONS: [&str; 8] = ["grid", "model", "fluid", "time", "ic", "forcing", "output", "study"];

/// Typed reader over one section that remembers which keys were consumed.
struct Section<'a> {
    name: &'static str,
    table: Option<&'a Table>,
    used: BTreeSet<&'static str>,
}

impl<'a> Section<'a> {
    fn new(root: &'a Table, name: &'static str) -> Result<Self> {
        let table = match root.get(name) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(_) => return Err(Error::validation(name, "must be a section")),
        };
        Ok(Section {
            name,
            table,
            used: BTreeSet::new(),
        })
    }

    fn key(&self, k: &str) -> String {
        format!("{}.{k}", self.name)
    }

    fn raw(&mut self, k: &'static str) -> Option<&'a Value> {
        self.used.insert(k);
        self.table.and_then(|t| t.get(k))
    }

    fn f64(&mut self, k: &'static str) -> Result<Option<f64>> {
        match self.raw(k) {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(*x)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(_) => Err(Error::validation(&self.key(k), "must be a number")),
        }
    }

    fn req_f64(&mut self, k: &'static str) -> Result<f64> {
        self.f64(k)?.ok_or_else(|| Error::validation(&self.key(k), "is required"))
    }

    fn int(&mut self, k: &'static str) -> Result<Option<i64>> {
        match self.raw(k) {
            None => Ok(None),
            Some(Value::Integer(i)) => Ok(Some(*i)),
            Some(_) => Err(Error::validation(&self.key(k), "must be an integer")),
        }
    }

    fn uint(&mut self, k: &'static str) -> Result<Option<u64>> {
        match self.int(k)? {
            None => Ok(None),
            Some(i) if i >= 0 => Ok(Some(i as u64)),
            Some(_) => Err(Error::validation(&self.key(k), "must be nonnegative")),
        }
    }

    fn bool(&mut self, k: &'static str, default: bool) -> Result<bool> {
        match self.raw(k) {
            None => Ok(default),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(_) => Err(Error::validation(&self.key(k), "must be true or false")),
        }
    }

    fn str(&mut self, k: &'static str) -> Result<Option<&'a str>> {
        match self.raw(k) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.as_str())),
            Some(_) => Err(Error::validation(&self.key(k), "must be a string")),
        }
    }

    fn f64_list(&mut self, k: &'static str) -> Result<Option<Vec<f64>>> {
        let key = self.key(k);
        match self.raw(k) {
            None => Ok(None),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| match v {
                    Value::Float(x) => Ok(*x),
                    Value::Integer(i) => Ok(*i as f64),
                    _ => Err(Error::validation(&key, "must be a list of numbers")),
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(_) => Err(Error::validation(&key, "must be a list of numbers")),
        }
    }

    fn int_list(&mut self, k: &'static str) -> Result<Option<Vec<i64>>> {
        let key = self.key(k);
        match self.raw(k) {
            None => Ok(None),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| v.as_integer().ok_or_else(|| Error::validation(&key, "must be a list of integers")))
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(_) => Err(Error::validation(&key, "must be a list of integers")),
        }
    }

    fn str_list(&mut self, k: &'static str) -> Result<Option<Vec<&'a str>>> {
        let key = self.key(k);
        match self.raw(k) {
            None => Ok(None),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| v.as_str().ok_or_else(|| Error::validation(&key, "must be a list of strings")))
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(_) => Err(Error::validation(&key, "must be a list of strings")),
        }
    }

    /// Rejects any key that was never asked for.
    fn finish(self) -> Result<()> {
        if let Some(t) = self.table {
            if let Some(k) = t.keys().find(|k| !self.used.contains(k.as_str())) {
                return Err(Error::UnknownKey(format!("{}.{k}", self.name)));
            }
        }
        Ok(())
    }
}

fn positive(key: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::validation(key, "must be positive"))
    }
}

fn field_spec(s: &mut Section<'_>, default_kind: &str) -> Result<FieldSpec> {
    let kind = s.str("kind")?.unwrap_or(default_kind);
    let amplitude = s.f64("amplitude")?.unwrap_or(1.0);
    let spec = match kind {
        "zero" => FieldSpec::Zero,
        "taylor_green" => FieldSpec::TaylorGreen { amplitude },
        "single_mode" => {
            let k = s.int_list("wavevector")?.unwrap_or_else(|| vec![1, 0, 0]);
            let wavevector: [i64; 3] = k
                .try_into()
                .map_err(|_| Error::validation(&s.key("wavevector"), "must have 3 entries"))?;
            let direction = match s.f64_list("direction")? {
                None => None,
                Some(d) => Some(
                    <[f64; 3]>::try_from(d)
                        .map_err(|_| Error::validation(&s.key("direction"), "must have 3 entries"))?,
                ),
            };
            FieldSpec::SingleMode {
                wavevector,
                amplitude,
                direction,
            }
        }
        "random_solenoidal" => FieldSpec::RandomSolenoidal {
            amplitude,
            spectrum_slope: s.f64("spectrum_slope")?.unwrap_or(-5.0 / 3.0),
            kmax: s.int("kmax")?.unwrap_or(4),
            seed: s.uint("seed")?.unwrap_or(0),
        },
        "manufactured" => {
            let name = s.str("expression")?.unwrap_or("abc");
            let expression = Manufactured::from_name(name)
                .ok_or_else(|| Error::validation(&s.key("expression"), format!("unknown expression `{name}`")))?;
            FieldSpec::Manufactured { expression, amplitude }
        }
        other => return Err(Error::validation(&s.key("kind"), format!("unknown kind `{other}`"))),
    };
    if !amplitude.is_finite() {
        return Err(Error::validation(&s.key("amplitude"), "must be finite"));
    }
    Ok(spec)
}

fn from_table(root: &Table) -> Result<RunConfig> {
    if let Some(k) = root.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
        return Err(Error::UnknownKey(k.clone()));
    }

    let mut s = Section::new(root, "grid")?;
    let n = s.uint("n")?.ok_or_else(|| Error::validation("grid.n", "is required"))? as usize;
    let dealias = s.bool("dealias", true)?;
    let fraction = s.f64("dealias_fraction")?.unwrap_or(DEFAULT_DEALIAS_FRACTION);
    let grid = Grid::with_dealias(n, fraction).map_err(|e| Error::validation("grid.n", e.to_string()))?;
    s.finish()?;

    let mut s = Section::new(root, "model")?;
    let kind = s.str("kind")?.ok_or_else(|| Error::validation("model.kind", "is required"))?;
    let order = s.uint("N")?;
    let delta = s.f64("delta")?;
    let max_order = s.uint("max_order")?.unwrap_or(DEFAULT_MAX_ORDER as u64) as u32;
    let filter_forcing = s.bool("filter_forcing", true)?;
    let filter_ic = s.bool("filter_ic", true)?;
    let advection = match s.str("advection")?.unwrap_or("advective") {
        "advective" => AdvectionForm::Advective,
        "divergence" => AdvectionForm::Divergence,
        o => return Err(Error::validation("model.advection", format!("unknown form `{o}`"))),
    };
    let hn_evaluation = match s.str("hn_evaluation")?.unwrap_or("closed_form") {
        "closed_form" => HnEvaluation::ClosedForm,
        "iterative" => HnEvaluation::Iterative,
        o => return Err(Error::validation("model.hn_evaluation", format!("unknown method `{o}`"))),
    };
    let (model, filter) = match kind.to_ascii_lowercase().as_str() {
        "nse" => (ModelKind::Nse, None),
        k @ ("leray_deconv" | "leray_alpha") => {
            let order = if k == "leray_alpha" {
                if order.is_some_and(|o| o != 0) {
                    return Err(Error::validation("model.N", "must be 0 for leray_alpha"));
                }
                0
            } else {
                order.unwrap_or(0)
            };
            let order = u32::try_from(order).map_err(|_| Error::validation("model.N", "is too large"))?;
            let delta = delta.ok_or_else(|| Error::validation("model.delta", "is required for leray_deconv"))?;
            positive("model.delta", delta)?;
            let spec = FilterSpec::with_max_order(delta, order, max_order)
                .map_err(|e| Error::validation("model.N", e.to_string()))?;
            (ModelKind::LerayDeconvolution(order), Some(spec))
        }
        other => return Err(Error::validation("model.kind", format!("unknown model `{other}`"))),
    };
    s.finish()?;

    let mut s = Section::new(root, "fluid")?;
    let nu = s.req_f64("nu")?;
    if !(nu >= 0.0 && nu.is_finite()) {
        return Err(Error::validation("fluid.nu", "must be nonnegative"));
    }
    s.finish()?;

    let mut s = Section::new(root, "time")?;
    let dt = positive("time.dt", s.req_f64("dt")?)?;
    let t_end = positive("time.t_end", s.req_f64("t_end")?)?;
    if t_end < dt {
        return Err(Error::validation("time.t_end", "must be at least time.dt"));
    }
    let snapshot_every = s.uint("snapshot_every")?.unwrap_or(0) as usize;
    s.finish()?;

    let mut s = Section::new(root, "ic")?;
    let ic = field_spec(&mut s, "taylor_green")?;
    s.finish()?;
    let mut s = Section::new(root, "forcing")?;
    let forcing = field_spec(&mut s, "zero")?;
    s.finish()?;

    let mut s = Section::new(root, "output")?;
    let dir = PathBuf::from(s.str("dir")?.unwrap_or("out"));
    let formats = s
        .str_list("formats")?
        .unwrap_or_else(|| vec!["csv", "snapshot"])
        .into_iter()
        .map(|f| match f {
            "csv" => Ok(OutputFormat::Csv),
            "snapshot" => Ok(OutputFormat::Snapshot),
            o => Err(Error::validation("output.formats", format!("unknown format `{o}`"))),
        })
        .collect::<Result<Vec<_>>>()?;
    s.finish()?;

    let mut s = Section::new(root, "study")?;
    let deltas = s.f64_list("deltas")?;
    let orders = s
        .int_list("orders")?
        .map(|v| {
            v.into_iter()
                .map(|o| u32::try_from(o).map_err(|_| Error::validation("study.orders", "must be nonnegative")))
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    let study_delta = s.f64("delta")?;
    s.finish()?;

    let solver = SolverConfig {
        grid,
        model,
        filter,
        nu,
        dt,
        t_end,
        forcing,
        ic,
        filter_forcing,
        filter_ic,
        dealias,
        advection,
        hn_evaluation,
        snapshot_every,
    };
    solver.validate()?;
    // surface bad field descriptors now rather than mid-run
    solver.ic.generate(grid).map_err(|e| Error::validation("ic", e.to_string()))?;
    solver.forcing.generate(grid).map_err(|e| Error::validation("forcing", e.to_string()))?;
    Ok(RunConfig {
        solver,
        output: OutputConfig { dir, formats },
        study: StudySection {
            deltas,
            orders,
            delta: study_delta,
        },
    })
}

fn field_table(f: &FieldSpec) -> Table {
    let mut t = Table::new();
    t.insert("kind".into(), f.kind_name().into());
    match f {
        FieldSpec::Zero => {}
        FieldSpec::TaylorGreen { amplitude } => {
            t.insert("amplitude".into(), (*amplitude).into());
        }
        FieldSpec::SingleMode {
            wavevector,
            amplitude,
            direction,
        } => {
            t.insert("wavevector".into(), Value::Array(wavevector.iter().map(|&k| k.into()).collect()));
            t.insert("amplitude".into(), (*amplitude).into());
            if let Some(d) = direction {
                t.insert("direction".into(), Value::Array(d.iter().map(|&x| x.into()).collect()));
            }
        }
        FieldSpec::RandomSolenoidal {
            amplitude,
            spectrum_slope,
            kmax,
            seed,
        } => {
            t.insert("amplitude".into(), (*amplitude).into());
            t.insert("spectrum_slope".into(), (*spectrum_slope).into());
            t.insert("kmax".into(), (*kmax).into());
            t.insert("seed".into(), (*seed as i64).into());
        }
        FieldSpec::Manufactured { expression, amplitude } => {
            t.insert("expression".into(), expression.name().into());
            t.insert("amplitude".into(), (*amplitude).into());
        }
    }
    t
}

impl RunConfig {
    /// Complete configuration with every default spelled out. Parsing the
    /// result yields an identical [`RunConfig`].
    pub fn to_table(&self) -> Table {
        let c = &self.solver;
        let mut root = Table::new();

        let mut t = Table::new();
        t.insert("n".into(), (c.grid.n() as i64).into());
        t.insert("dealias".into(), c.dealias.into());
        t.insert("dealias_fraction".into(), c.grid.dealias_fraction().into());
        root.insert("grid".into(), t.into());

        let mut t = Table::new();
        match (c.model, c.filter) {
            (ModelKind::LerayDeconvolution(order), Some(f)) => {
                t.insert("kind".into(), "leray_deconv".into());
                t.insert("delta".into(), f.delta().into());
                t.insert("N".into(), (order as i64).into());
                t.insert("max_order".into(), (f.max_order() as i64).into());
            }
            _ => {
                t.insert("kind".into(), "nse".into());
            }
        }
        t.insert("filter_forcing".into(), c.filter_forcing.into());
        t.insert("filter_ic".into(), c.filter_ic.into());
        let adv = match c.advection {
            AdvectionForm::Advective => "advective",
            AdvectionForm::Divergence => "divergence",
        };
        t.insert("advection".into(), adv.into());
        let hn = match c.hn_evaluation {
            HnEvaluation::ClosedForm => "closed_form",
            HnEvaluation::Iterative => "iterative",
        };
        t.insert("hn_evaluation".into(), hn.into());
        root.insert("model".into(), t.into());

        let mut t = Table::new();
        t.insert("nu".into(), c.nu.into());
        root.insert("fluid".into(), t.into());

        let mut t = Table::new();
        t.insert("dt".into(), c.dt.into());
        t.insert("t_end".into(), c.t_end.into());
        t.insert("snapshot_every".into(), (c.snapshot_every as i64).into());
        root.insert("time".into(), t.into());

        root.insert("ic".into(), field_table(&c.ic).into());
        root.insert("forcing".into(), field_table(&c.forcing).into());

        let mut t = Table::new();
        t.insert("dir".into(), self.output.dir.display().to_string().into());
        t.insert(
            "formats".into(),
            Value::Array(self.output.formats.iter().map(|f| f.name().into()).collect()),
        );
        root.insert("output".into(), t.into());

        let mut t = Table::new();
        if let Some(d) = &self.study.deltas {
            t.insert("deltas".into(), Value::Array(d.iter().map(|&x| x.into()).collect()));
        }
        if let Some(o) = &self.study.orders {
            t.insert("orders".into(), Value::Array(o.iter().map(|&x| (x as i64).into()).collect()));
        }
        if let Some(d) = self.study.delta {
            t.insert("delta".into(), d.into());
        }
        if !t.is_empty() {
            root.insert("study".into(), t.into());
        }
        root
    }

    /// Text of [`RunConfig::to_table`].
    pub fn effective_toml(&self) -> String {
        toml::to_string(&self.to_table()).expect("plain values serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[grid]\nn = 16\n[model]\nkind = \"NSE\"\n[fluid]\nnu = 0.1\n[time]\ndt = 0.01\nt_end = 0.1\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config_str(MINIMAL, "mem", &[]).unwrap();
        assert_eq!(c.solver.model, ModelKind::Nse);
        assert!(c.solver.dealias && c.solver.filter_ic && c.solver.filter_forcing);
        assert_eq!(c.solver.ic, FieldSpec::TaylorGreen { amplitude: 1.0 });
        assert_eq!(c.solver.forcing, FieldSpec::Zero);
        assert_eq!(c.output.dir, PathBuf::from("out"));
        assert_eq!(c.solver.snapshot_every, 0);
    }

    #[test]
    fn missing_delta_names_the_key() {
        let text = MINIMAL.replace("NSE", "leray_deconv");
        match parse_config_str(&text, "mem", &[]) {
            Err(Error::Validation { key, .. }) => assert_eq!(key, "model.delta"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_nu_rejected() {
        let text = MINIMAL.replace("nu = 0.1", "nu = -0.1");
        match parse_config_str(&text, "mem", &[]) {
            Err(Error::Validation { key, .. }) => assert_eq!(key, "fluid.nu"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = format!("{MINIMAL}[ic]\nkind = \"taylor_green\"\nampltude = 2.0\n");
        assert!(matches!(parse_config_str(&text, "mem", &[]), Err(Error::UnknownKey(k)) if k == "ic.ampltude"));
        let text = format!("{MINIMAL}[solver]\nx = 1\n");
        assert!(matches!(parse_config_str(&text, "mem", &[]), Err(Error::UnknownKey(_))));
    }

    #[test]
    fn parse_error_carries_line() {
        let text = "[grid]\nn = 16\n[model\n";
        match parse_config_str(text, "cfg.toml", &[]) {
            Err(Error::Parse { line, path, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(path, "cfg.toml");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn overrides_apply() {
        let c = parse_config_str(
            MINIMAL,
            "mem",
            &["model.kind=leray_deconv".into(), "model.delta=0.25".into(), "model.N = 3".into()],
        )
        .unwrap();
        assert_eq!(c.solver.model, ModelKind::LerayDeconvolution(3));
        assert_eq!(c.solver.filter.unwrap().delta(), 0.25);
        assert!(parse_config_str(MINIMAL, "mem", &["nodot=1".into()]).is_err());
    }

    #[test]
    fn echo_round_trips() {
        let text = format!(
            "{}[ic]\nkind = \"random_solenoidal\"\nseed = 7\nspectrum_slope = -1.3\n[forcing]\nkind = \"single_mode\"\nwavevector = [1, 2, 0]\namplitude = 0.3\n[study]\ndeltas = [0.4, 0.2]\n",
            MINIMAL.replace("NSE", "leray_deconv").replace("[fluid]", "delta = 0.1\nN = 2\n[fluid]")
        );
        let c = parse_config_str(&text, "mem", &[]).unwrap();
        let echo = c.effective_toml();
        let again = parse_config_str(&echo, "echo", &[]).unwrap();
        assert_eq!(c, again);
        assert_eq!(echo, again.effective_toml());
    }
}
