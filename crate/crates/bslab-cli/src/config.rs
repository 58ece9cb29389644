//! Flat key-value run configuration: defaults, presets, file values and
//! `--set` overrides, merged in that order.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

#[derive(Clone, Copy, Debug)]
pub enum Kind {
    Number,
    Count,
    Flag,
    Choice(&'static [&'static str]),
    Numbers,
    Pairs,
}

pub struct Key {
    pub name: &'static str,
    pub kind: Kind,
    pub default: fn() -> Value,
    pub doc: &'static str,
}

macro_rules! key {
    ($name:literal, $kind:expr, $default:expr, $doc:literal) => {
        Key { name: $name, kind: $kind, default: || json!($default), doc: $doc }
    };
}

const MODELS: &[&str] = &["shallow_water", "euler"];
const INITS: &[&str] = &["random", "e1", "e2", "e3", "e4"];
const ANALYSES: &[&str] = &["continuation", "amplitudes"];

pub static SCHEMA: &[Key] = &[
    key!("b1", Kind::Number, 2.0, "negative viscosity, x component"),
    key!("b2", Kind::Number, 2.0, "negative viscosity, y component"),
    key!("d1", Kind::Number, 1.0, "hyperviscosity, x component"),
    key!("d2", Kind::Number, 1.0, "hyperviscosity, y component"),
    key!("f", Kind::Number, 0.3, "Coriolis parameter"),
    key!("g", Kind::Number, 9.8, "gravity"),
    key!("H0", Kind::Number, 0.1, "mean layer depth"),
    key!("C", Kind::Number, 0.0, "linear bottom drag"),
    key!("Q", Kind::Number, 0.0, "quadratic bottom drag"),
    key!("nu_v", Kind::Number, 0.0, "vertical viscosity"),
    key!("mu", Kind::Number, 0.0, "buoyancy diffusivity"),
    key!("N2", Kind::Number, 0.0, "squared buoyancy frequency"),
    key!("model", Kind::Choice(MODELS), "shallow_water", "spectrum: shallow_water or euler"),
    key!("k_max", Kind::Number, 3.0, "spectrum/flows: raster covers [-k_max, k_max]^2"),
    key!("nk", Kind::Count, 201, "spectrum/flows: raster points per axis"),
    key!("b_values", Kind::Numbers, Vec::<f64>::new(), "spectrum (euler): b values, empty means b1"),
    key!("angle", Kind::Number, 0.0, "modes: direction of the critical wave vector, radians"),
    key!("alpha1", Kind::Number, 1.0, "flows: velocity amplitude"),
    key!("alpha2", Kind::Number, -0.5, "flows: surface amplitude"),
    key!("loci_tol", Kind::Number, 0.02, "flows: cells within this of a curve count as on it"),
    key!("n", Kind::Count, 64, "simulate/growth/verify: grid points per axis"),
    key!("dt", Kind::Number, 0.1, "time step"),
    key!("t_end", Kind::Number, 100.0, "final time"),
    key!("seed", Kind::Count, 0, "random seed (growth: first seed)"),
    key!("dealias_fraction", Kind::Number, 2.0 / 3.0, "retained fraction of each wave-number axis"),
    key!("output_stride", Kind::Count, 10, "steps between diagnostic records"),
    key!("keep_mean", Kind::Flag, false, "keep the mean flow instead of zeroing it"),
    key!("init", Kind::Choice(INITS), "random", "simulate: initial data"),
    key!("init_norm", Kind::Number, 1.0, "simulate: H2 norm of random data, or shear amplitude"),
    key!("eps", Kind::Number, 0.05, "growth: theorem epsilon"),
    key!("perturbation", Kind::Number, 1e-3, "growth: H2 norm of the random perturbation"),
    key!("seeds", Kind::Count, 20, "growth: number of runs"),
    key!("star_mode", Kind::Count, 1, "growth: shear mode 1..4 carrying the large-scale state"),
    key!("analysis", Kind::Choice(ANALYSES), "continuation", "bifurcate: continuation or amplitudes"),
    key!("alpha", Kind::Number, 0.01, "bifurcate: distance below critical drag, C = C_c - alpha H0"),
    key!("kappa", Kind::Number, 0.0, "bifurcate: wave number offset from k_c"),
    key!("modes", Kind::Count, 31, "bifurcate: cosine modes of the profile"),
    key!("steps", Kind::Count, 200, "bifurcate: maximum continuation steps"),
    key!("direction", Kind::Number, -1.0, "bifurcate: sign of the initial change in C"),
    key!("c_stop", Kind::Number, 0.0, "bifurcate: stop when C reaches this value"),
    key!("initial_step", Kind::Number, 1e-2, "bifurcate: first arclength step"),
    key!("max_step", Kind::Number, 5e-2, "bifurcate: largest arclength step"),
    key!("with_stability", Kind::Flag, true, "bifurcate: compute spectra along the branch"),
    key!("alpha_max", Kind::Number, 0.1, "bifurcate (amplitudes): largest alpha"),
    key!("n_alpha", Kind::Count, 101, "bifurcate (amplitudes): number of alpha values"),
    key!("cases", Kind::Pairs, Vec::<[f64; 2]>::new(), "bifurcate (amplitudes): [Q, f] pairs, empty means the configured Q, f"),
];

pub const PRESETS: &[&str] = &["fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "thm43"];

pub fn preset(name: &str) -> Option<Value> {
    let v = match name {
        "fig1" => json!({"model": "euler", "b_values": [0.6, 1.6, 3.0], "d1": 1.0, "d2": 1.0, "f": 0.0, "k_max": 2.0}),
        "fig2" => json!({"model": "shallow_water", "b1": 2.0, "b2": 2.0, "d1": 1.0, "d2": 1.0,
                         "f": 0.3, "g": 9.8, "H0": 0.1, "C": 0.1, "k_max": 2.0}),
        "fig3" => json!({"b1": 1.5, "b2": 2.2, "d1": 1.0, "d2": 1.04, "f": 0.3, "g": 9.8, "H0": 0.1,
                         "alpha1": 1.0, "alpha2": -0.5, "k_max": 2.0}),
        "fig4" => json!({"n": 128, "dt": 0.1, "b1": 0.0015, "b2": 0.0015, "d1": 0.001, "d2": 0.001,
                         "t_end": 8500.0, "f": 0.0, "init": "random", "output_stride": 100}),
        "fig5" => json!({"b1": 1.5, "b2": 2.2, "d1": 1.0, "d2": 1.04, "f": 0.3, "g": 9.8, "H0": 0.1, "Q": 0.0,
                         "alpha1": 1.0, "alpha2": 0.0, "k_max": 2.0}),
        "fig6" => json!({"analysis": "amplitudes", "b1": 2.0, "b2": 2.0, "d1": 1.0, "d2": 1.0, "g": 9.8, "H0": 0.1,
                         "cases": [[0.0, 10.0], [0.0, 0.0], [0.5, 0.3]]}),
        "fig7" => json!({"analysis": "continuation", "b1": 2.0, "b2": 2.0, "d1": 1.0, "d2": 1.0,
                         "f": 0.3, "g": 9.8, "H0": 0.1, "Q": 0.05, "alpha": 0.01}),
        "thm43" => json!({"b1": 1.5, "b2": 1.5, "d1": 1.0, "d2": 1.0, "f": 0.0, "eps": 0.05,
                          "perturbation": 1e-3, "seeds": 20, "n": 32, "dt": 1e-3, "t_end": 10.0, "output_stride": 100}),
        _ => return None,
    };
    Some(v)
}

fn lookup(name: &str) -> Option<&'static Key> {
    SCHEMA.iter().find(|k| k.name == name)
}

fn type_ok(kind: Kind, v: &Value) -> bool {
    let num = |x: &Value| x.as_f64().is_some_and(f64::is_finite);
    match kind {
        Kind::Number => num(v),
        Kind::Count => v.as_u64().is_some(),
        Kind::Flag => v.is_boolean(),
        Kind::Choice(allowed) => v.as_str().is_some_and(|s| allowed.contains(&s)),
        Kind::Numbers => v.as_array().is_some_and(|a| a.iter().all(num)),
        Kind::Pairs => v.as_array().is_some_and(|a| a.iter().all(|p| p.as_array().is_some_and(|p| p.len() == 2 && p.iter().all(num)))),
    }
}

fn expected(kind: Kind) -> String {
    match kind {
        Kind::Number => "a finite number".into(),
        Kind::Count => "a non-negative integer".into(),
        Kind::Flag => "true or false".into(),
        Kind::Choice(allowed) => format!("one of {}", allowed.join(", ")),
        Kind::Numbers => "a list of numbers".into(),
        Kind::Pairs => "a list of [number, number] pairs".into(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub values: BTreeMap<String, Value>,
}

impl RunConfig {
    /// Merges defaults, the preset (from `preset_flag` or the file's
    /// `preset` key), the file and the `key=value` overrides.
    pub fn resolve(file: Option<&str>, preset_flag: Option<&str>, sets: &[String]) -> Result<Self, String> {
        let mut file_map = match file {
            Some(text) => match serde_json::from_str::<Value>(text) {
                Ok(Value::Object(m)) => m,
                Ok(_) => return Err("config file must hold a JSON object".into()),
                Err(e) => return Err(format!("config file is not valid JSON: {e}")),
            },
            None => Map::new(),
        };
        let file_preset = match file_map.remove("preset") {
            Some(Value::String(s)) => Some(s),
            Some(Value::Null) | None => None,
            Some(_) => return Err("preset: expected a preset name".into()),
        };
        let preset_name = preset_flag.map(str::to_string).or(file_preset);

        let mut values: BTreeMap<String, Value> = SCHEMA.iter().map(|k| (k.name.to_string(), (k.default)())).collect();
        let mut layer = |src: &str, key: &str, v: Value| -> Result<(), String> {
            let k = lookup(key).ok_or_else(|| format!("{key}: unknown key ({src})"))?;
            if !type_ok(k.kind, &v) {
                return Err(format!("{key}: expected {}, got {v} ({src})", expected(k.kind)));
            }
            values.insert(key.to_string(), v);
            Ok(())
        };
        if let Some(p) = &preset_name {
            let Some(Value::Object(m)) = preset(p) else {
                return Err(format!("preset: unknown preset {p:?}, expected one of {}", PRESETS.join(", ")));
            };
            for (k, v) in m {
                layer("preset", &k, v)?;
            }
        }
        for (k, v) in file_map {
            layer("config file", &k, v)?;
        }
        for s in sets {
            let (k, raw) = s.split_once('=').ok_or_else(|| format!("--set {s}: expected key=value"))?;
            let k = k.trim();
            let v = serde_json::from_str::<Value>(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
            layer("--set", k, v)?;
        }
        Ok(Self { preset: preset_name, values })
    }

    pub fn num(&self, key: &str) -> f64 {
        self.values[key].as_f64().expect("schema-checked number")
    }

    pub fn count(&self, key: &str) -> u64 {
        self.values[key].as_u64().expect("schema-checked integer")
    }

    pub fn usize(&self, key: &str) -> usize {
        self.count(key) as usize
    }

    pub fn flag(&self, key: &str) -> bool {
        self.values[key].as_bool().expect("schema-checked flag")
    }

    pub fn text(&self, key: &str) -> &str {
        self.values[key].as_str().expect("schema-checked choice")
    }

    pub fn numbers(&self, key: &str) -> Vec<f64> {
        self.values[key].as_array().map(|a| a.iter().filter_map(Value::as_f64).collect()).unwrap_or_default()
    }

    pub fn pairs(&self, key: &str) -> Vec<[f64; 2]> {
        self.values[key]
            .as_array()
            .map(|a| a.iter().filter_map(|p| Some([p.get(0)?.as_f64()?, p.get(1)?.as_f64()?])).collect())
            .unwrap_or_default()
    }

    /// The echo written to `config.resolved`.
    pub fn to_json(&self, command: &str) -> Value {
        let mut m = Map::new();
        m.insert("command".into(), json!(command));
        m.insert("preset".into(), self.preset.as_ref().map_or(Value::Null, |p| json!(p)));
        let params: Map<String, Value> = self.values.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        m.insert("parameters".into(), Value::Object(params));
        Value::Object(m)
    }
}

pub fn schema_help() -> String {
    let mut s = String::from("Configuration keys (JSON object; defaults in brackets):\n");
    for k in SCHEMA {
        s.push_str(&format!("  {:<17} {} [{}]\n", k.name, k.doc, (k.default)()));
    }
    s
}
