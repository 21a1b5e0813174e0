//! Job files: TOML with one table per pipeline stage, expressions as quoted
//! strings.

use crate::error::{Error, Result};
use crate::expr::{differentiate, parse_with, Expr, SymbolTable};
use crate::geometry::{DomainBox, Frame, RiemannChart};
use crate::solver::{Grid, SolveOptions};
use crate::tolerances::Tolerances;
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub problem: ProblemConfig,
    /// Named expressions usable in every later expression. Each name `p` also
    /// defines `p_x` and `p_xy` for all state variables `x`, `y`.
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub params: IndexMap<String, String>,
    /// `r1 .. rn`, each the component list of one field.
    pub frame: BTreeMap<String, Vec<String>>,
    pub domain: DomainConfig,
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart: Option<ChartConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<Expected>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub vars: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub base: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nodes: Vec<usize>,
    #[serde(default = "default_substeps")]
    pub substeps: usize,
    /// Take coefficients on faces where they cannot be evaluated as limits
    /// from the interior.
    #[serde(default)]
    pub boundary_limit: bool,
}

fn default_substeps() -> usize {
    SolveOptions::default().substeps
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartConfig {
    pub w_vars: Vec<String>,
    /// `w(u)`, in the state variables and params.
    pub rho: Vec<String>,
    /// `u(w)`, in the chart variables.
    pub rho_inv: Vec<String>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub base: Vec<f64>,
    pub nodes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    /// Variable the initial functions are written in.
    #[serde(default = "default_param")]
    pub param: String,
    /// One entry per unknown of the reduced system (`lambda2`, `kappa1`,
    /// `h1`, ...), or `lambda` for the trivial solution. Constants may use
    /// the state variables and are evaluated at the base point.
    #[serde(default)]
    pub values: IndexMap<String, String>,
}

fn default_param() -> String {
    "t".into()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

/// What a fixture must reproduce.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expected {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation: Option<String>,
    /// `holds`, `fails` or `n/a`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compat: Option<String>,
    /// Lower bound on the compatibility residual when it must fail clearly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compat_above: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trivial_only: Option<bool>,
    /// Index sets, 1-based.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index_sets: Option<Vec<Vec<usize>>>,
    /// Bound on `|Z^k_ij|` over distinct indices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub off_diagonal_z: Option<f64>,
    /// Closed forms of every eigenvalue in the state variables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<String>>,
    /// Closed forms of reduced unknowns on their own grid.
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub unknowns: IndexMap<String, String>,
    /// Bound on closed-form errors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

/// Command-line adjustments applied before a config is resolved.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tol: Vec<(String, String)>,
    pub grid: Option<Vec<usize>>,
    pub out: Option<PathBuf>,
}

impl JobConfig {
    pub fn parse(text: &str) -> Result<JobConfig> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<JobConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        JobConfig::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// The config as TOML; parsing it back gives an equal config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("job configs always serialize")
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(seed) = o.seed {
            self.tolerances.seed = seed;
        }
        for (k, v) in &o.tol {
            self.tolerances.set(k, v).map_err(Error::Config)?;
        }
        if let Some(g) = &o.grid {
            self.grid.nodes = g.clone();
        }
        if let Some(out) = &o.out {
            self.run.out = Some(out.clone());
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.problem.vars.len()
    }
}

/// A config with every expression parsed and every box and grid built.
#[derive(Clone, Debug)]
pub struct Job {
    pub config: JobConfig,
    pub symbols: SymbolTable,
    pub frame: Frame,
    pub chart: Option<RiemannChart>,
    pub grid: Grid,
    pub w_grid: Option<Grid>,
    pub tol: Tolerances,
    pub opts: SolveOptions,
}

fn parse_at(text: &str, st: &SymbolTable, at: &str) -> Result<Expr> {
    parse_with(text, st).map_err(|e| Error::Config(format!("{at}: {e}")))
}

fn check_len(at: &str, len: usize, n: usize) -> Result<()> {
    if len != n {
        return Err(Error::Config(format!("{at}: expected {n} entries, found {len}")));
    }
    Ok(())
}

fn build_grid(at: &str, domain: &DomainBox, nodes: &[usize], base: &[f64]) -> Result<Grid> {
    check_len(&format!("{at}.nodes"), nodes.len(), domain.dim())?;
    if let Some(k) = nodes.iter().position(|&m| m < 2) {
        return Err(Error::Config(format!("{at}.nodes[{k}]: resolution must be at least 2")));
    }
    Grid::uniform(domain, nodes, base)
}

fn build_box(at: &str, lower: &[f64], upper: &[f64], base: &[f64], n: usize) -> Result<DomainBox> {
    check_len(&format!("{at}.lower"), lower.len(), n)?;
    check_len(&format!("{at}.upper"), upper.len(), n)?;
    check_len(&format!("{at}.base"), base.len(), n)?;
    let b = DomainBox::new(lower.to_vec(), upper.to_vec()).map_err(|e| Error::Config(format!("{at}: {e}")))?;
    if !b.contains(base) {
        return Err(Error::Config(format!("{at}.base {base:?} lies outside the box")));
    }
    Ok(b)
}

impl Job {
    pub fn new(config: JobConfig) -> Result<Job> {
        let n = config.n();
        if n < 2 {
            return Err(Error::Config("problem.vars: at least two state variables are needed".into()));
        }
        let vars = &config.problem.vars;
        let mut st = SymbolTable::new(vars);
        for (name, text) in &config.params {
            if vars.contains(name) {
                return Err(Error::Config(format!("params.{name}: shadows a state variable")));
            }
            let e = parse_at(text, &st, &format!("params.{name}"))?;
            for x in vars {
                let ex = differentiate(&e, x);
                for y in vars {
                    st.add_alias(&format!("{name}_{x}{y}"), differentiate(&ex, y));
                }
                st.add_alias(&format!("{name}_{x}"), ex);
            }
            st.add_alias(name, e);
        }

        let expected_keys: Vec<String> = (1..=n).map(|j| format!("r{j}")).collect();
        if let Some(k) = config.frame.keys().find(|k| !expected_keys.contains(k)) {
            return Err(Error::Config(format!("frame.{k}: fields are named r1..r{n}")));
        }
        let mut r = vec![Vec::with_capacity(n); n];
        for key in &expected_keys {
            let comps = config
                .frame
                .get(key)
                .ok_or_else(|| Error::Config(format!("frame.{key}: missing")))?;
            check_len(&format!("frame.{key}"), comps.len(), n)?;
            for (m, text) in comps.iter().enumerate() {
                r[m].push(parse_at(text, &st, &format!("frame.{key}[{}]", m + 1))?);
            }
        }
        let d = &config.domain;
        let domain = build_box("domain", &d.lower, &d.upper, &d.base, n)?;
        let frame = Frame::new(vars.clone(), r, domain.clone(), d.base.clone())
            .map_err(|e| Error::Config(format!("frame: {e}")))?;
        let grid = build_grid("grid", &domain, &config.grid.nodes, &d.base)?;
        if config.grid.substeps == 0 {
            return Err(Error::Config("grid.substeps: must be positive".into()));
        }

        let (chart, w_grid) = match &config.chart {
            Some(c) => {
                check_len("chart.w_vars", c.w_vars.len(), n)?;
                check_len("chart.rho", c.rho.len(), n)?;
                check_len("chart.rho_inv", c.rho_inv.len(), n)?;
                let w_st = SymbolTable::new(&c.w_vars);
                let rho = c
                    .rho
                    .iter()
                    .enumerate()
                    .map(|(i, t)| parse_at(t, &st, &format!("chart.rho[{}]", i + 1)))
                    .collect::<Result<_>>()?;
                let rho_inv = c
                    .rho_inv
                    .iter()
                    .enumerate()
                    .map(|(i, t)| parse_at(t, &w_st, &format!("chart.rho_inv[{}]", i + 1)))
                    .collect::<Result<_>>()?;
                let w_box = build_box("chart", &c.lower, &c.upper, &c.base, n)?;
                let w_grid = build_grid("chart", &w_box, &c.nodes, &c.base)?;
                let chart = RiemannChart {
                    w_vars: c.w_vars.clone(),
                    rho,
                    rho_inv,
                    w_box,
                    w_base: c.base.clone(),
                };
                (Some(chart), Some(w_grid))
            }
            None => (None, None),
        };

        let opts = SolveOptions {
            substeps: config.grid.substeps,
            boundary_limit: config.grid.boundary_limit,
            ..SolveOptions::default()
        };
        Ok(Job {
            tol: config.tolerances.clone(),
            config,
            symbols: st,
            frame,
            chart,
            grid,
            w_grid,
            opts,
        })
    }

    /// Parses an expression in the state variables and params.
    pub fn expr(&self, text: &str, at: &str) -> Result<Expr> {
        parse_at(text, &self.symbols, at)
    }

    /// Parses an expression in the chart variables.
    pub fn w_expr(&self, text: &str, at: &str) -> Result<Expr> {
        let chart = self
            .chart
            .as_ref()
            .ok_or_else(|| Error::Config(format!("{at}: needs a [chart]")))?;
        parse_at(text, &SymbolTable::new(&chart.w_vars), at)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[problem]
name = "shear"
vars = ["x", "y"]

[params]
q = "x*y"

[frame]
r1 = ["1", "0"]
r2 = ["q_y", "1"]

[domain]
lower = [0.0, 0.0]
upper = [1.0, 1.0]
base = [0.5, 0.5]

[grid]
nodes = [5, 5]
"#;

    #[test]
    fn parses_and_derives_param_symbols() {
        let job = Job::new(JobConfig::parse(MINIMAL).unwrap()).unwrap();
        assert_eq!(job.frame.r[0][1].to_string(), "x");
        assert!(job.symbols.alias("q_xy").unwrap().is_const(1.0));
        assert_eq!(job.grid.len(), 25);
    }

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = JobConfig::parse(MINIMAL).unwrap();
        cfg.apply(&Overrides {
            seed: Some(3),
            tol: vec![("curl_tol".into(), "2e-3".into())],
            grid: Some(vec![7, 9]),
            out: Some("out".into()),
        })
        .unwrap();
        let back = JobConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.tolerances.seed, 3);
        assert_eq!(back.grid.nodes, vec![7, 9]);
    }

    #[test]
    fn errors_name_their_location() {
        let bad = MINIMAL.replace("\"q_y\"", "\"q_y +\"");
        let err = Job::new(JobConfig::parse(&bad).unwrap()).unwrap_err();
        assert!(err.to_string().contains("frame.r2[1]"), "{err}");
        let bad = MINIMAL.replace("nodes = [5, 5]", "nodes = [5, 1]");
        let err = Job::new(JobConfig::parse(&bad).unwrap()).unwrap_err();
        assert!(err.to_string().contains("grid.nodes[1]"), "{err}");
        let bad = MINIMAL.replace("[grid]", "[grid]\nspacing = 2");
        assert!(JobConfig::parse(&bad).is_err());
    }
}
