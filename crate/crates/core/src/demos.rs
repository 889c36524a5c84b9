//! Built-in worked examples, written as problem files.

use crate::error::SetupError;
use crate::mappings::{catalog_entry, CATALOG};
use crate::problem::{parse_problem, Model, Problem, SearchSettings};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    Solve,
    Branches,
    Catastrophe,
    Characteristics,
    MapScan,
    Timeline,
    Classify2d,
}

impl Action {
    pub fn from_name(s: &str) -> Option<Action> {
        Some(match s {
            "solve" => Action::Solve,
            "branches" => Action::Branches,
            "catastrophe" => Action::Catastrophe,
            "characteristics" => Action::Characteristics,
            "map-scan" => Action::MapScan,
            "timeline" => Action::Timeline,
            "classify2d" => Action::Classify2d,
            _ => return None,
        })
    }
}

pub struct DemoDef {
    pub name: &'static str,
    pub summary: &'static str,
    /// Hodograph-side problem, if any.
    pub hodograph: Option<&'static str>,
    /// Initial data for the characteristics side, if any.
    pub initial_data: Option<&'static str>,
    pub action: Action,
    /// Time used by `map-scan` and `characteristics` when none is given.
    pub t: Option<f64>,
}

const EX61_F: &str = r#"
dimension = 2
hodograph = ["-atanh(u) + 2*atanh(v)", "atanh(u) - atanh(v)"]
[domain]
lower = [-1, -1]
upper = [1, 1]
"#;

const EX61_U0: &str = r#"
dimension = 2
initial_data = ["tanh(x + 2*y)", "tanh(x + y)"]
[domain]
lower = [-2, -2]
upper = [2, 2]
"#;

const EX62_F: &str = r#"
dimension = 2
hodograph = ["(eps*atanh(v) - atanh(u))/(eps^2 - 1)", "(eps*atanh(u) - atanh(v))/(eps^2 - 1)"]
[domain]
lower = [-1, -1]
upper = [1, 1]
[parameters]
eps = 2
"#;

const EX62_U0: &str = r#"
dimension = 2
initial_data = ["tanh(x + eps*y)", "tanh(eps*x + y)"]
[domain]
lower = [-2, -2]
upper = [2, 2]
[parameters]
eps = 2
"#;

const EX63_F: &str = r#"
dimension = 2
hodograph = [
  "(delta*atanh(1 - u/u0) - beta*atanh(1 - v/v0))/(alpha*delta - beta*gamma)",
  "(alpha*atanh(1 - v/v0) - gamma*atanh(1 - u/u0))/(alpha*delta - beta*gamma)",
]
[domain]
lower = [0, 0]
upper = ["2*u0", "2*v0"]
[search]
per_branch = true
[parameters]
alpha = 1
beta = 0
gamma = 0
delta = 2
u0 = 1
v0 = 1
"#;

const EX63_U0: &str = r#"
dimension = 2
initial_data = ["u0*(1 - tanh(alpha*x + beta*y))", "v0*(1 - tanh(gamma*x + delta*y))"]
[domain]
lower = [-2, -2]
upper = [2, 2]
[parameters]
alpha = 1
beta = 0
gamma = 0
delta = 2
u0 = 1
v0 = 1
"#;

const EX64_U0: &str = r#"
dimension = 2
initial_data = ["exp(-x^2 - y^2)", "exp(-x^2 - 2*y^2)"]
[domain]
lower = [-2, -2]
upper = [2, 2]
"#;

const EX71_F: &str = r#"
dimension = 2
hodograph = ["-2*u^3 - 2*v - v^3", "-u - 5*v^3 - 3*u^3"]
[domain]
lower = [-0.5, -0.5]
upper = [0.5, 0.5]
[search]
t_range = [0, 5]
"#;

const EX72_F: &str = r#"
dimension = 2
hodograph = ["-u^3/3 + 2*v^3/3 - u + 2*v", "u^3/3 - v^3/3 + u - v"]
[domain]
lower = [-3, -3]
upper = [3, 3]
[search]
t_range = [-3, 5]
"#;

const EX73_F: &str = r#"
dimension = 2
hodograph = ["u^3/3 + 2*u*v^2/3 - 2*v", "v^3/3 + u^2*v/3 + u"]
[domain]
lower = [-3, -3]
upper = [3, 3]
[search]
t_range = [0, 5]
"#;

const EX81_F: &str = r#"
dimension = 3
hodograph = ["atanh(1 - 2*w)", "atanh(1 - 2*u)", "atanh(1 - 2*v)"]
[domain]
lower = [0, 0, 0]
upper = [1, 1, 1]
"#;

const EX81_U0: &str = r#"
dimension = 3
initial_data = ["(1 - tanh(y))/2", "(1 - tanh(z))/2", "(1 - tanh(x))/2"]
[domain]
lower = [-2, -2, -2]
upper = [2, 2, 2]
"#;

const EX82_F: &str = r#"
dimension = 3
hodograph = [
  "(atanh(u) - eps*atanh(v) + eps^2*atanh(w))/(1 + eps^3)",
  "(atanh(v) - eps*atanh(w) + eps^2*atanh(u))/(1 + eps^3)",
  "(atanh(w) - eps*atanh(u) + eps^2*atanh(v))/(1 + eps^3)",
]
[domain]
lower = [-1, -1, -1]
upper = [1, 1, 1]
[parameters]
eps = -2
"#;

const EX82_U0: &str = r#"
dimension = 3
initial_data = ["tanh(x + eps*y)", "tanh(y + eps*z)", "tanh(z + eps*x)"]
[domain]
lower = [-2, -2, -2]
upper = [2, 2, 2]
[parameters]
eps = -2
"#;

pub const DEMOS: &[DemoDef] = &[
    DemoDef {
        name: "ex61",
        summary: "tanh shear data; first catastrophe at t = 1 + sqrt 2",
        hodograph: Some(EX61_F),
        initial_data: Some(EX61_U0),
        action: Action::Catastrophe,
        t: Some(2.5),
    },
    DemoDef {
        name: "ex62",
        summary: "one-parameter tanh family (param eps)",
        hodograph: Some(EX62_F),
        initial_data: Some(EX62_U0),
        action: Action::Catastrophe,
        t: Some(1.1),
    },
    DemoDef {
        name: "ex63",
        summary: "kink data, decoupled when beta = gamma = 0 (params alpha beta gamma delta u0 v0)",
        hodograph: Some(EX63_F),
        initial_data: Some(EX63_U0),
        action: Action::Catastrophe,
        t: Some(1.1),
    },
    DemoDef {
        name: "ex64",
        summary: "Gaussian bumps, initial data only",
        hodograph: None,
        initial_data: Some(EX64_U0),
        action: Action::Characteristics,
        t: Some(0.8281359),
    },
    DemoDef {
        name: "ex71",
        summary: "cubic polynomial data, positive minimum sqrt 2",
        hodograph: Some(EX71_F),
        initial_data: None,
        action: Action::Catastrophe,
        t: Some(1.5),
    },
    DemoDef {
        name: "ex72",
        summary: "cubic data singular outside (1 - sqrt 2, 1 + sqrt 2)",
        hodograph: Some(EX72_F),
        initial_data: None,
        action: Action::Timeline,
        t: Some(3.0),
    },
    DemoDef {
        name: "ex73",
        summary: "cubic data without real branches",
        hodograph: Some(EX73_F),
        initial_data: None,
        action: Action::Timeline,
        t: Some(1.0),
    },
    DemoDef {
        name: "ex81",
        summary: "cyclic three-dimensional kink data, t_c = 2",
        hodograph: Some(EX81_F),
        initial_data: Some(EX81_U0),
        action: Action::Catastrophe,
        t: Some(2.1),
    },
    DemoDef {
        name: "ex82",
        summary: "cyclic three-dimensional tanh family (param eps)",
        hodograph: Some(EX82_F),
        initial_data: Some(EX82_U0),
        action: Action::Catastrophe,
        t: Some(1.1),
    },
];

/// A demo ready to run.
#[derive(Clone, Debug)]
pub struct Demo {
    pub name: String,
    pub hodograph: Option<Problem>,
    pub initial_data: Option<Problem>,
    pub action: Action,
    pub t: Option<f64>,
}

impl Demo {
    /// The problem an action should run on: the hodograph side unless the
    /// action needs initial data or only initial data exist.
    pub fn problem_for(&self, action: Action) -> Option<&Problem> {
        match action {
            Action::Characteristics => self.initial_data.as_ref(),
            _ => self.hodograph.as_ref().or(self.initial_data.as_ref()),
        }
    }
}

pub fn demo_names() -> Vec<&'static str> {
    DEMOS.iter().map(|d| d.name).chain(CATALOG).collect()
}

/// Build a demo, with `params` overriding its parameters.
pub fn load_demo(name: &str, params: &[(String, f64)]) -> Result<Option<Demo>, SetupError> {
    if let Some(def) = DEMOS.iter().find(|d| d.name == name) {
        for (k, _) in params {
            let known = [def.hodograph, def.initial_data]
                .into_iter()
                .flatten()
                .any(|src| parse_problem(src, &[]).is_ok_and(|p| p.parameters.iter().any(|(n, _)| n == k)));
            if !known {
                return Err(SetupError::Invalid(format!("demo {name} has no parameter `{k}`")));
            }
        }
        let load = |src: Option<&str>| src.map(|s| parse_problem(s, params)).transpose();
        return Ok(Some(Demo {
            name: def.name.into(),
            hodograph: load(def.hodograph)?,
            initial_data: load(def.initial_data)?,
            action: def.action,
            t: def.t,
        }));
    }
    if let Some(entry) = catalog_entry(name) {
        if let Some((k, _)) = params.first() {
            return Err(SetupError::Invalid(format!("demo {name} has no parameter `{k}`")));
        }
        let n = entry.system.dim();
        return Ok(Some(Demo {
            name: entry.name.into(),
            hodograph: Some(Problem {
                model: Model::Hodograph(entry.system),
                search: SearchSettings {
                    t_range: Some((-3.0, 3.0)),
                    ..SearchSettings::for_dimension(n)
                },
                parameters: Vec::new(),
            }),
            initial_data: None,
            action: Action::MapScan,
            t: Some(0.5),
        }));
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_demo_loads() {
        for name in demo_names() {
            let d = load_demo(name, &[]).unwrap().unwrap();
            assert!(d.problem_for(d.action).is_some(), "{name}");
        }
        assert!(load_demo("nope", &[]).unwrap().is_none());
    }

    #[test]
    fn parameter_override() {
        let d = load_demo("ex62", &[("eps".into(), 3.0)]).unwrap().unwrap();
        let s = d.hodograph.as_ref().unwrap().system().unwrap().clone();
        // J(0) = [[-1, eps], [eps, -1]]/(eps^2 - 1)
        let j = s.jacobian(&[0.0, 0.0]).unwrap();
        assert!((j[(0, 1)] - 3.0 / 8.0).abs() < 1e-15);
        assert!(load_demo("fold2d", &[("eps".into(), 1.0)]).is_err());
        assert!(load_demo("ex61", &[("eps".into(), 1.0)]).is_err());
    }

    #[test]
    fn ex63_box_follows_amplitudes() {
        let d = load_demo("ex63", &[("v0".into(), 0.25)]).unwrap().unwrap();
        assert_eq!(d.hodograph.unwrap().system().unwrap().domain().upper(), &[2.0, 0.5]);
    }

    #[test]
    fn hodograph_and_initial_data_agree_at_t0() {
        // x = f(u) at t = 0 inverts u = u0(x)
        let coupled = vec![("beta".to_string(), 0.3), ("gamma".to_string(), -0.2)];
        for (name, params) in [("ex61", vec![]), ("ex62", vec![]), ("ex63", coupled), ("ex81", vec![]), ("ex82", vec![])] {
            let d = load_demo(name, &params).unwrap().unwrap();
            let s = d.hodograph.unwrap().system().unwrap().clone();
            let f = d.initial_data.unwrap().field().unwrap().clone();
            let x0: Vec<f64> = (0..s.dim()).map(|k| 0.1 * (k as f64 + 1.0)).collect();
            let u = f.velocity(&x0).unwrap();
            let back = s.map_forward(&u, 0.0).unwrap();
            for (a, b) in back.iter().zip(&x0) {
                assert!((a - b).abs() < 1e-12, "{name}: {back:?} vs {x0:?}");
            }
        }
    }
}
