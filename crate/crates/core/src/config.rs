//! Run configuration in a line-oriented `key = value` format.
//!
//! ```text
//! # comment
//! [grid]
//! dim = 2
//! n = 64
//! length = 2pi          # a number, `pi`, or `<number>pi`
//! dealias = 0.6666666666666666
//!
//! [model]
//! kind = leray-alpha    # nse | leray-alpha | leray-deconv | mhd-deconv
//! nu = 0.01
//! alpha = 0.1
//! theta = 0.25
//! n_deconv = 0
//! nu2 = 0.01            # mhd-deconv only
//! unsafe_subcritical = false
//!
//! [forcing]
//! kind = zero           # zero | abc | kolmogorov | modes
//! amplitude = 1.0       # abc, kolmogorov
//! a = 1  b = 1  c = 1   # abc coefficients, one per line
//! wavenumber = 4        # kolmogorov
//! mode1 = 0 0 1 | 0 -0.5 0.5 0 0 0 | 0.0   # modes: wave index | re im per component | decay
//!
//! [stepper]
//! dt = 0.001
//! t_end = 1.0
//! sample_every = 1
//! scheme = ifrk4        # ifrk4 | ifeuler
//! cfl_limit = 0.5
//!
//! [initial]             # also [magnetic] for mhd-deconv
//! kind = taylor-green   # taylor-green | random | abc | zero | checkpoint
//! amplitude = 1.0       # taylor-green, abc
//! seed = 1              # random
//! slope = -1.0          # random: |u_k| = |k|^slope
//! cutoff = 4            # random: shells 0 < |a| < cutoff + 1/2
//! energy = 0.5          # random, optional: rescale to this kinetic energy
//! path = run.chk        # checkpoint
//!
//! [output]
//! dir = out
//! checkpoint_every = 0  # steps; 0 writes only the final checkpoint
//! ```
//!
//! Every key is optional except `dim`, `n`, `kind` (model), `nu`, `dt` and
//! `t_end`. Unknown sections and keys, repeated keys and invalid values are
//! rejected.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;

use crate::dynamics::{ForcingMode, ForcingSpec, ModelConfig, ModelKind};
use crate::error::{Error, Result};
use crate::filter::{FilterParams, CRITICAL_THETA};
use crate::grid::{WaveGrid, DEFAULT_DEALIAS_FRACTION};
use crate::stepper::{Scheme, StepperConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
    pub length: f64,
    pub dealias: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<Arc<WaveGrid>> {
        WaveGrid::with_dealias_fraction(self.dim, self.n, self.length, self.dealias)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialCondition {
    TaylorGreen { amplitude: f64 },
    Random {
        seed: u64,
        slope: f64,
        cutoff: u32,
        energy: Option<f64>,
    },
    Abc { amplitude: f64 },
    Zero,
    Checkpoint { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub model: ModelConfig,
    pub stepper: StepperConfig,
    pub initial: InitialCondition,
    pub magnetic: Option<InitialCondition>,
    pub output_dir: PathBuf,
    pub checkpoint_every: usize,
}

struct Entry {
    line: usize,
    value: String,
}

type Section = BTreeMap<String, Entry>;

const SECTIONS: &[(&str, &[&str])] = &[
    ("grid", &["dim", "n", "length", "dealias"]),
    (
        "model",
        &["kind", "nu", "nu2", "alpha", "theta", "n_deconv", "unsafe_subcritical"],
    ),
    ("forcing", &["kind", "amplitude", "a", "b", "c", "wavenumber"]),
    ("stepper", &["dt", "t_end", "sample_every", "scheme", "cfl_limit"]),
    (
        "initial",
        &["kind", "amplitude", "seed", "slope", "cutoff", "energy", "path"],
    ),
    (
        "magnetic",
        &["kind", "amplitude", "seed", "slope", "cutoff", "energy", "path"],
    ),
    ("output", &["dir", "checkpoint_every"]),
];

fn known_key(section: &str, key: &str) -> bool {
    if section == "forcing" && is_mode_key(key) {
        return true;
    }
    SECTIONS
        .iter()
        .find(|(s, _)| *s == section)
        .is_some_and(|(_, keys)| keys.contains(&key))
}

fn is_mode_key(key: &str) -> bool {
    key.strip_prefix("mode")
        .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
}

fn tokenize(text: &str) -> Result<BTreeMap<String, Section>> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut seen_at: BTreeMap<String, usize> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| Error::Syntax {
                line,
                message: format!("malformed section header `{body}`"),
            })?;
            let name = name.trim().to_string();
            if !SECTIONS.iter().any(|(s, _)| *s == name) {
                return Err(Error::Syntax {
                    line,
                    message: format!("unknown section `[{name}]`"),
                });
            }
            if let Some(prev) = seen_at.insert(name.clone(), line) {
                return Err(Error::Syntax {
                    line,
                    message: format!("section `[{name}]` repeated (first at line {prev})"),
                });
            }
            sections.entry(name.clone()).or_default();
            current = Some(name);
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| Error::Syntax {
            line,
            message: format!("expected `key = value`, got `{body}`"),
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(Error::Syntax {
                line,
                message: "empty key or value".into(),
            });
        }
        let section = current.as_ref().ok_or_else(|| Error::Syntax {
            line,
            message: format!("`{key}` appears before any section header"),
        })?;
        if !known_key(section, &key) {
            return Err(Error::UnknownKey {
                line,
                key: format!("{section}.{key}"),
            });
        }
        let sec = sections.get_mut(section).expect("section registered");
        if let Some(prev) = sec.get(&key) {
            return Err(Error::Syntax {
                line,
                message: format!(
                    "duplicate key `{section}.{key}` at lines {} and {line}",
                    prev.line
                ),
            });
        }
        sec.insert(key, Entry { line, value });
    }
    Ok(sections)
}

fn violation(key: &str, line: Option<usize>, message: impl fmt::Display) -> Error {
    let message = match line {
        Some(l) => format!("line {l}: {message}"),
        None => message.to_string(),
    };
    Error::InvariantViolation {
        key: key.to_string(),
        message,
    }
}

struct Reader<'a> {
    name: &'static str,
    section: Option<&'a Section>,
}

impl<'a> Reader<'a> {
    fn entry(&self, key: &str) -> Option<&'a Entry> {
        self.section.and_then(|s| s.get(key))
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.entry(key).map(|e| e.line)
    }

    fn full(&self, key: &str) -> String {
        format!("{}.{key}", self.name)
    }

    fn parsed<T, F>(&self, key: &str, parse: F) -> Result<Option<T>>
    where
        F: Fn(&str) -> std::result::Result<T, String>,
    {
        match self.entry(key) {
            None => Ok(None),
            Some(e) => parse(&e.value)
                .map(Some)
                .map_err(|m| violation(&self.full(key), Some(e.line), m)),
        }
    }

    fn required<T, F>(&self, key: &str, parse: F) -> Result<T>
    where
        F: Fn(&str) -> std::result::Result<T, String>,
    {
        self.parsed(key, parse)?
            .ok_or_else(|| violation(&self.full(key), None, "missing required key"))
    }

    fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.parsed(key, parse_real)
    }

    fn int<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.parsed(key, |v| {
            v.parse::<T>()
                .map_err(|_| format!("expected a non-negative integer, got `{v}`"))
        })
    }
}

fn parse_real(v: &str) -> std::result::Result<f64, String> {
    let t = v.trim();
    let value = if let Some(coef) = t.strip_suffix("pi") {
        let coef = coef.trim().trim_end_matches('*').trim();
        let c = if coef.is_empty() {
            Ok(1.0)
        } else {
            coef.parse::<f64>()
        };
        c.map(|c| c * PI)
    } else {
        t.parse::<f64>()
    };
    match value {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(format!("expected a finite number, got `{v}`")),
    }
}

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got `{v}`")),
    }
}

fn parse_from<T: FromStr<Err = Error>>(v: &str) -> std::result::Result<T, String> {
    v.parse::<T>().map_err(|e| e.to_string())
}

/// `a0 a1 [a2] | re0 im0 re1 im1 [re2 im2] [| decay]`
fn parse_mode(v: &str, dim: usize) -> std::result::Result<ForcingMode, String> {
    let parts: Vec<&str> = v.split('|').map(str::trim).collect();
    if !(2..=3).contains(&parts.len()) {
        return Err("expected `wave index | amplitudes [| decay]`".into());
    }
    let idx: Vec<i32> = parts[0]
        .split_whitespace()
        .map(|t| t.parse::<i32>().map_err(|_| format!("bad wave index `{t}`")))
        .collect::<std::result::Result<_, _>>()?;
    if idx.len() != dim {
        return Err(format!("wave index needs {dim} integers"));
    }
    let amps: Vec<f64> = parts[1]
        .split_whitespace()
        .map(parse_real)
        .collect::<std::result::Result<_, _>>()?;
    if amps.len() != 2 * dim {
        return Err(format!("amplitude needs {} numbers (re im per component)", 2 * dim));
    }
    let decay = match parts.get(2) {
        Some(d) => parse_real(d)?,
        None => 0.0,
    };
    let mut wave_index = [0i32; 3];
    wave_index[..dim].copy_from_slice(&idx);
    Ok(ForcingMode {
        wave_index,
        amplitude: amps.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect(),
        decay,
    })
}

fn parse_initial(r: &Reader, dealias_cutoff: usize) -> Result<Option<InitialCondition>> {
    let Some(kind) = r.parsed("kind", |v| Ok(v.to_string()))? else {
        if r.section.is_some_and(|s| !s.is_empty()) {
            return Err(violation(&r.full("kind"), None, "missing required key"));
        }
        return Ok(None);
    };
    let allowed: &[&str] = match kind.as_str() {
        "taylor-green" | "abc" => &["kind", "amplitude"],
        "random" => &["kind", "seed", "slope", "cutoff", "energy"],
        "zero" => &["kind"],
        "checkpoint" => &["kind", "path"],
        other => {
            return Err(violation(
                &r.full("kind"),
                r.line("kind"),
                format!("unknown initial condition `{other}`"),
            ))
        }
    };
    if let Some(sec) = r.section {
        if let Some((k, e)) = sec.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            return Err(violation(
                &r.full(k),
                Some(e.line),
                format!("not used by initial condition `{kind}`"),
            ));
        }
    }
    let ic = match kind.as_str() {
        "taylor-green" => InitialCondition::TaylorGreen {
            amplitude: r.f64("amplitude")?.unwrap_or(1.0),
        },
        "abc" => InitialCondition::Abc {
            amplitude: r.f64("amplitude")?.unwrap_or(1.0),
        },
        "random" => {
            let cutoff: u32 = r.int("cutoff")?.unwrap_or(4);
            if cutoff == 0 || cutoff as usize > dealias_cutoff {
                return Err(violation(
                    &r.full("cutoff"),
                    r.line("cutoff"),
                    format!("must lie in 1..={dealias_cutoff} (the dealias cutoff)"),
                ));
            }
            let energy = r.f64("energy")?;
            if energy.is_some_and(|e| !(e > 0.0)) {
                return Err(violation(&r.full("energy"), r.line("energy"), "must be positive"));
            }
            InitialCondition::Random {
                seed: r.int("seed")?.unwrap_or(0),
                slope: r.f64("slope")?.unwrap_or(-1.0),
                cutoff,
                energy,
            }
        }
        "zero" => InitialCondition::Zero,
        _ => InitialCondition::Checkpoint {
            path: r.required("path", |v| Ok(PathBuf::from(v)))?,
        },
    };
    Ok(Some(ic))
}

fn parse_forcing(r: &Reader, grid: &WaveGrid) -> Result<ForcingSpec> {
    let kind = r
        .parsed("kind", |v| Ok(v.to_string()))?
        .unwrap_or_else(|| "zero".into());
    let section_keys: Vec<(&String, &Entry)> = r.section.map(|s| s.iter().collect()).unwrap_or_default();
    let allowed = |k: &str| match kind.as_str() {
        "zero" => k == "kind",
        "abc" => ["kind", "amplitude", "a", "b", "c"].contains(&k),
        "kolmogorov" => ["kind", "amplitude", "wavenumber"].contains(&k),
        "modes" => k == "kind" || is_mode_key(k),
        _ => true,
    };
    if let Some((k, e)) = section_keys.iter().find(|(k, _)| !allowed(k)) {
        return Err(violation(
            &r.full(k),
            Some(e.line),
            format!("not used by forcing `{kind}`"),
        ));
    }
    let spec = match kind.as_str() {
        "zero" => ForcingSpec::Zero,
        "abc" => {
            if grid.dim() != 3 {
                return Err(violation(&r.full("kind"), r.line("kind"), "abc forcing needs dim = 3"));
            }
            ForcingSpec::abc(
                r.f64("a")?.unwrap_or(1.0),
                r.f64("b")?.unwrap_or(1.0),
                r.f64("c")?.unwrap_or(1.0),
                r.f64("amplitude")?.unwrap_or(1.0),
            )
        }
        "kolmogorov" => {
            let m: i32 = r.int("wavenumber")?.unwrap_or(1);
            ForcingSpec::kolmogorov(grid.dim(), r.f64("amplitude")?.unwrap_or(1.0), m)
        }
        "modes" => {
            let mut modes = Vec::new();
            let mut keys: Vec<(&String, &Entry)> =
                section_keys.iter().copied().filter(|(k, _)| is_mode_key(k)).collect();
            keys.sort_by_key(|(k, _)| k[4..].parse::<u64>().unwrap_or(u64::MAX));
            for (k, e) in keys {
                modes.push(
                    parse_mode(&e.value, grid.dim())
                        .map_err(|m| violation(&r.full(k), Some(e.line), m))?,
                );
            }
            if modes.is_empty() {
                return Err(violation(&r.full("mode1"), None, "modes forcing needs mode1, mode2, ..."));
            }
            ForcingSpec::Modes(modes)
        }
        other => {
            return Err(violation(
                &r.full("kind"),
                r.line("kind"),
                format!("unknown forcing `{other}`"),
            ))
        }
    };
    spec.validate(grid)
        .map_err(|e| violation(&r.full("kind"), r.line("kind"), e))?;
    Ok(spec)
}

/// Parses and fully validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let sections = tokenize(text)?;
    let reader = |name: &'static str| Reader {
        name,
        section: sections.get(name),
    };

    let g = reader("grid");
    let dim: usize = g.required("dim", |v| {
        v.parse::<usize>().map_err(|_| format!("expected 2 or 3, got `{v}`"))
    })?;
    if !(2..=3).contains(&dim) {
        return Err(violation("grid.dim", g.line("dim"), "must be 2 or 3"));
    }
    let n: usize = g.required("n", |v| {
        v.parse::<usize>().map_err(|_| format!("expected an integer, got `{v}`"))
    })?;
    if n < 8 || n % 2 != 0 {
        return Err(violation("grid.n", g.line("n"), "must be even and at least 8"));
    }
    let length = g.f64("length")?.unwrap_or(2.0 * PI);
    if !(length > 0.0) {
        return Err(violation("grid.length", g.line("length"), "must be positive"));
    }
    let dealias = g.f64("dealias")?.unwrap_or(DEFAULT_DEALIAS_FRACTION);
    let grid_spec = GridSpec {
        dim,
        n,
        length,
        dealias,
    };
    let grid = grid_spec
        .build()
        .map_err(|e| violation("grid.dealias", g.line("dealias"), e))?;

    let m = reader("model");
    let kind: ModelKind = m.required("kind", parse_from)?;
    let nu = m.required("nu", parse_real)?;
    if !(nu > 0.0) {
        return Err(violation("model.nu", m.line("nu"), "must be positive"));
    }
    let nu2 = m.f64("nu2")?;
    match (kind.has_magnetic_field(), nu2) {
        (true, None) => return Err(violation("model.nu2", None, "required for mhd-deconv")),
        (true, Some(v)) if !(v > 0.0) => {
            return Err(violation("model.nu2", m.line("nu2"), "must be positive"))
        }
        (false, Some(_)) => {
            return Err(violation("model.nu2", m.line("nu2"), "only used by mhd-deconv"))
        }
        _ => {}
    }
    let alpha = m.f64("alpha")?.unwrap_or(0.0);
    if !(alpha >= 0.0) {
        return Err(violation("model.alpha", m.line("alpha"), "must be non-negative"));
    }
    let theta = m.f64("theta")?.unwrap_or(CRITICAL_THETA);
    if !(0.0..=1.0).contains(&theta) {
        return Err(violation("model.theta", m.line("theta"), "must lie in [0, 1]"));
    }
    let n_deconv: u32 = m.int("n_deconv")?.unwrap_or(0);
    let unsafe_subcritical = m.parsed("unsafe_subcritical", parse_bool)?.unwrap_or(false);
    if kind.is_regularized() && theta < CRITICAL_THETA && !unsafe_subcritical {
        return Err(violation(
            "model.theta",
            m.line("theta"),
            format!("theta = {theta} is below the critical value 1/4; set unsafe_subcritical = true to allow it"),
        ));
    }
    let forcing = parse_forcing(&reader("forcing"), &grid)?;
    let model = ModelConfig {
        kind,
        nu,
        nu2,
        filter: FilterParams {
            alpha,
            theta,
            n_deconv,
        },
        forcing,
        unsafe_subcritical,
    };
    model
        .validate(&grid)
        .map_err(|e| violation("forcing.kind", reader("forcing").line("kind"), e))?;

    let s = reader("stepper");
    let dt = s.required("dt", parse_real)?;
    if !(dt > 0.0) {
        return Err(violation("stepper.dt", s.line("dt"), "must be positive"));
    }
    let t_end = s.required("t_end", parse_real)?;
    if !(t_end >= dt) {
        return Err(violation("stepper.t_end", s.line("t_end"), "must be at least dt"));
    }
    let sample_every: usize = s.int("sample_every")?.unwrap_or(1);
    if sample_every == 0 {
        return Err(violation("stepper.sample_every", s.line("sample_every"), "must be at least 1"));
    }
    let scheme: Scheme = s.parsed("scheme", parse_from)?.unwrap_or_default();
    let cfl_limit = s.f64("cfl_limit")?.unwrap_or(0.5);
    if !(cfl_limit > 0.0) {
        return Err(violation("stepper.cfl_limit", s.line("cfl_limit"), "must be positive"));
    }
    let stepper = StepperConfig {
        dt,
        t_end,
        scheme,
        sample_every,
        cfl_limit,
    };

    let initial = parse_initial(&reader("initial"), grid.dealias_cutoff())?
        .ok_or_else(|| violation("initial.kind", None, "missing required key"))?;
    let magnetic = parse_initial(&reader("magnetic"), grid.dealias_cutoff())?;
    match (kind.has_magnetic_field(), &magnetic) {
        (true, None) if !matches!(initial, InitialCondition::Checkpoint { .. }) => {
            return Err(violation("magnetic.kind", None, "mhd-deconv needs a [magnetic] section"))
        }
        (false, Some(_)) => {
            return Err(violation(
                "magnetic.kind",
                reader("magnetic").line("kind"),
                "only used by mhd-deconv",
            ))
        }
        _ => {}
    }
    for (name, ic) in [("initial", Some(&initial)), ("magnetic", magnetic.as_ref())] {
        if matches!(ic, Some(InitialCondition::Abc { .. })) && dim != 3 {
            return Err(violation(&format!("{name}.kind"), None, "abc needs dim = 3"));
        }
    }

    let o = reader("output");
    let output_dir = o
        .parsed("dir", |v| Ok(PathBuf::from(v)))?
        .unwrap_or_else(|| PathBuf::from("out"));
    let checkpoint_every: usize = o.int("checkpoint_every")?.unwrap_or(0);

    Ok(RunConfig {
        grid: grid_spec,
        model,
        stepper,
        initial,
        magnetic,
        output_dir,
        checkpoint_every,
    })
}

impl FromStr for RunConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_config(s)
    }
}

fn write_ic(f: &mut fmt::Formatter<'_>, name: &str, ic: &InitialCondition) -> fmt::Result {
    writeln!(f, "\n[{name}]")?;
    match ic {
        InitialCondition::TaylorGreen { amplitude } => {
            writeln!(f, "kind = taylor-green\namplitude = {amplitude:?}")
        }
        InitialCondition::Abc { amplitude } => writeln!(f, "kind = abc\namplitude = {amplitude:?}"),
        InitialCondition::Random {
            seed,
            slope,
            cutoff,
            energy,
        } => {
            writeln!(f, "kind = random\nseed = {seed}\nslope = {slope:?}\ncutoff = {cutoff}")?;
            if let Some(e) = energy {
                writeln!(f, "energy = {e:?}")?;
            }
            Ok(())
        }
        InitialCondition::Zero => writeln!(f, "kind = zero"),
        InitialCondition::Checkpoint { path } => {
            writeln!(f, "kind = checkpoint\npath = {}", path.display())
        }
    }
}

/// Canonical text form; parsing it gives back an equal configuration.
impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g = &self.grid;
        writeln!(
            f,
            "[grid]\ndim = {}\nn = {}\nlength = {:?}\ndealias = {:?}",
            g.dim, g.n, g.length, g.dealias
        )?;
        let m = &self.model;
        let kind = m.kind.name();
        writeln!(
            f,
            "\n[model]\nkind = {kind}\nnu = {:?}\nalpha = {:?}\ntheta = {:?}\nn_deconv = {}\nunsafe_subcritical = {}",
            m.nu, m.filter.alpha, m.filter.theta, m.filter.n_deconv, m.unsafe_subcritical
        )?;
        if let Some(nu2) = m.nu2 {
            writeln!(f, "nu2 = {nu2:?}")?;
        }
        writeln!(f, "\n[forcing]")?;
        match &m.forcing {
            ForcingSpec::Zero => writeln!(f, "kind = zero")?,
            ForcingSpec::Modes(modes) => {
                writeln!(f, "kind = modes")?;
                for (i, md) in modes.iter().enumerate() {
                    let idx: Vec<String> =
                        md.wave_index[..g.dim].iter().map(|a| a.to_string()).collect();
                    let amp: Vec<String> = md
                        .amplitude
                        .iter()
                        .map(|c| format!("{:?} {:?}", c.re, c.im))
                        .collect();
                    writeln!(
                        f,
                        "mode{} = {} | {} | {:?}",
                        i + 1,
                        idx.join(" "),
                        amp.join(" "),
                        md.decay
                    )?;
                }
            }
        }
        let s = &self.stepper;
        writeln!(
            f,
            "\n[stepper]\ndt = {:?}\nt_end = {:?}\nsample_every = {}\nscheme = {}\ncfl_limit = {:?}",
            s.dt,
            s.t_end,
            s.sample_every,
            s.scheme.name(),
            s.cfl_limit
        )?;
        write_ic(f, "initial", &self.initial)?;
        if let Some(b) = &self.magnetic {
            write_ic(f, "magnetic", b)?;
        }
        writeln!(
            f,
            "\n[output]\ndir = {}\ncheckpoint_every = {}",
            self.output_dir.display(),
            self.checkpoint_every
        )
    }
}
