//! Named models built from a numeric parameter map.

use std::collections::BTreeMap;

use crate::coefficients::CoefficientProcess as C;
use crate::error::{BsdeError, Result};
use crate::model::{BsdeModel, GeneratorSpec, TerminalSpec};

/// Parameter map of a catalog entry.
pub type Params = BTreeMap<String, f64>;

struct Entry {
    name: &'static str,
    summary: &'static str,
    params: &'static [(&'static str, f64)],
}

const ENTRIES: &[Entry] = &[
    Entry { name: "martingale", summary: "f = 0, xi = W_1(T)", params: &[] },
    Entry {
        name: "constant_driver",
        summary: "f = kappa, xi = xi0",
        params: &[("kappa", 1.0), ("xi0", 0.0)],
    },
    Entry { name: "discount", summary: "f = -r y, xi = xi0", params: &[("r", 0.1), ("xi0", 1.0)] },
    Entry {
        name: "linear_exp",
        summary: "f = a y + b z + c, xi = scale exp(sigma W_1(T))",
        params: &[("a", 0.0), ("b", 0.0), ("c", 0.0), ("sigma", 0.5), ("scale", 1.0)],
    },
    Entry {
        name: "linear_z",
        summary: "f = b z, xi = sin(frequency W_1(T))",
        params: &[("b", 0.5), ("frequency", 2.0)],
    },
    Entry {
        name: "sin_clip",
        summary: "f = h + c1 |W_1| sin(y) + c2 clip(z), xi = sin(W_1(T))",
        params: &[("h", 0.2), ("c1", 0.5), ("c2", 0.01), ("clip", 1.0)],
    },
    Entry {
        name: "bounded",
        summary: "f = h + c1 sin(y) + c2 clip(z), xi = sin(W_1(T)); all coefficients constant",
        params: &[("h", 0.2), ("c1", 0.5), ("c2", 0.1), ("clip", 1.0)],
    },
    Entry {
        name: "ou_sin",
        summary: "f = |X| sin(y) with X an Ornstein-Uhlenbeck process driven by W_1, xi = sin(W_1(T))",
        params: &[("mean", 0.5), ("rate", 1.0), ("vol", 0.3)],
    },
    Entry {
        name: "exp_square",
        summary: "f = 0, xi = exp(coef W(T)^2)",
        params: &[("coef", 1.0)],
    },
    Entry {
        name: "lipschitz_violation",
        summary: "f = 2 c1 y with declared modulus c1, xi = 1",
        params: &[("c1", 0.5)],
    },
    Entry {
        name: "call",
        summary: "f = -r y, xi = max(W_1(T) - strike, 0)",
        params: &[("r", 0.05), ("strike", 0.0)],
    },
    Entry {
        name: "running_max",
        summary: "f = -r y, xi = max_t W_1(t)",
        params: &[("r", 0.05)],
    },
];

/// Names and one-line descriptions of all entries.
pub fn catalog_names() -> Vec<(&'static str, &'static str)> {
    ENTRIES.iter().map(|e| (e.name, e.summary)).collect()
}

/// Default parameters of an entry.
pub fn default_params(name: &str) -> Result<Params> {
    let e = entry(name)?;
    Ok(e.params.iter().map(|(k, v)| (k.to_string(), *v)).collect())
}

fn entry(name: &str) -> Result<&'static Entry> {
    ENTRIES.iter().find(|e| e.name == name).ok_or_else(|| {
        let known: Vec<_> = ENTRIES.iter().map(|e| e.name).collect();
        BsdeError::invalid(format!("unknown model `{name}` (known: {})", known.join(", ")))
    })
}

/// Builds entry `name` for Brownian dimension `dim_w`; unspecified
/// parameters take their defaults.
pub fn build_model(name: &str, params: &Params, dim_w: usize) -> Result<BsdeModel> {
    let e = entry(name)?;
    for key in params.keys() {
        if !e.params.iter().any(|(k, _)| k == key) {
            let known: Vec<_> = e.params.iter().map(|(k, _)| *k).collect();
            return Err(BsdeError::invalid(format!(
                "model `{name}` has no parameter `{key}` (parameters: {})",
                if known.is_empty() { "none".to_string() } else { known.join(", ") }
            )));
        }
    }
    let p = |key: &str| -> f64 {
        params.get(key).copied().unwrap_or_else(|| {
            e.params.iter().find(|(k, _)| *k == key).map(|(_, v)| *v).expect("declared parameter")
        })
    };
    let unit = |v: f64| -> Vec<f64> {
        let mut out = vec![0.0; dim_w];
        out[0] = v;
        out
    };
    let zero_b = || vec![C::zero(); dim_w];
    let model = match name {
        "martingale" => BsdeModel::new(
            name,
            dim_w,
            GeneratorSpec::Zero,
            vec![TerminalSpec::Affine { intercept: 0.0, slope: unit(1.0) }],
            C::zero(),
            C::zero(),
        ),
        "constant_driver" => BsdeModel::new(
            name,
            dim_w,
            GeneratorSpec::Constant(vec![p("kappa")]),
            vec![TerminalSpec::Constant(p("xi0"))],
            C::zero(),
            C::zero(),
        ),
        "discount" | "call" | "running_max" => {
            let r = p("r");
            let terminal = match name {
                "discount" => TerminalSpec::Constant(p("xi0")),
                "call" => TerminalSpec::Call { strike: p("strike") },
                _ => TerminalSpec::RunningMax { scale: 1.0 },
            };
            BsdeModel::new(
                name,
                dim_w,
                GeneratorSpec::Linear { a: C::constant(-r), b: zero_b(), c: C::zero() },
                vec![terminal],
                C::constant(r.abs()),
                C::zero(),
            )
        }
        "linear_exp" => {
            let (a, b) = (p("a"), p("b"));
            let mut bs = zero_b();
            bs[0] = C::constant(b);
            BsdeModel::new(
                name,
                dim_w,
                GeneratorSpec::Linear { a: C::constant(a), b: bs, c: C::constant(p("c")) },
                vec![TerminalSpec::Exp { scale: p("scale"), sigma: unit(p("sigma")) }],
                C::constant(a.abs()),
                C::constant(b.abs()),
            )
        }
        "linear_z" => {
            let b = p("b");
            let mut bs = zero_b();
            bs[0] = C::constant(b);
            BsdeModel::new(
                name,
                dim_w,
                GeneratorSpec::Linear { a: C::zero(), b: bs, c: C::zero() },
                vec![TerminalSpec::Sin { amplitude: 1.0, frequency: p("frequency") }],
                C::zero(),
                C::constant(b.abs()),
            )
        }
        "sin_clip" | "bounded" => {
            let (c1, c2) = if name == "sin_clip" {
                (C::abs_brownian(p("c1")), C::constant(p("c2")))
            } else {
                (C::constant(p("c1")), C::constant(p("c2")))
            };
            BsdeModel::new(
                name,
                dim_w,
                GeneratorSpec::SinClip { offset: C::constant(p("h")), c1: c1.clone(), c2: c2.clone(), clip: p("clip") },
                vec![TerminalSpec::Sin { amplitude: 1.0, frequency: 1.0 }],
                c1,
                c2,
            )
        }
        "ou_sin" => {
            let c1 = C::ou_driven(p("mean"), p("rate"), p("vol"));
            BsdeModel::new(
                name,
                dim_w,
                GeneratorSpec::SinClip { offset: C::zero(), c1: c1.clone(), c2: C::zero(), clip: 1.0 },
                vec![TerminalSpec::Sin { amplitude: 1.0, frequency: 1.0 }],
                c1,
                C::zero(),
            )
        }
        "exp_square" => BsdeModel::new(
            name,
            dim_w,
            GeneratorSpec::Zero,
            vec![TerminalSpec::ExpSquare { coef: p("coef") }],
            C::zero(),
            C::zero(),
        ),
        "lipschitz_violation" => {
            let c1 = p("c1");
            BsdeModel::new(
                name,
                dim_w,
                GeneratorSpec::Linear { a: C::constant(2.0 * c1), b: zero_b(), c: C::zero() },
                vec![TerminalSpec::Constant(1.0)],
                C::constant(c1),
                C::zero(),
            )
        }
        _ => unreachable!("entry lookup succeeded"),
    };
    model.map_err(|e| e.context(format!("building model `{name}`")))
}
