//! Small operators used by the cases, the CLI tests and the docs.

use crate::compactification::Compactification;
use crate::subgroup::SubgroupOperator;
use crate::{get_usize, GalleryError, Params, Result};
use nalgebra::DMatrix;
use perronlab_core::spectral::sup_operator;
use perronlab_core::{OperatorMatrix, SpaceModel, C64};
use serde_json::json;

/// Markov matrix whose fixed space `span{(1,1,1), (1,0,-1)}` is not a
/// sublattice of `R^3`.
pub fn fixed_space_3x3() -> OperatorMatrix {
    sup_operator(&[
        vec![1.0, 0.0, 0.0],
        vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        vec![0.0, 0.0, 1.0],
    ])
}

/// Nonnegative matrix with spectrum `{-1, 1}` for which no eigenvector at
/// `-1` is dominated by a fixed vector, for `T` or for its transpose.
pub fn no_daec_4x4() -> OperatorMatrix {
    sup_operator(&[
        vec![0.0, 1.0, 0.0, 1.0],
        vec![1.0, 0.0, 0.0, 0.0],
        vec![1.0, 0.0, 1.0, 0.0],
        vec![0.0, 0.0, 0.0, 1.0],
    ])
}

pub fn swap() -> OperatorMatrix {
    sup_operator(&[vec![0.0, 1.0], vec![1.0, 0.0]])
}

pub fn diag_half() -> OperatorMatrix {
    sup_operator(&[vec![1.0, 0.0], vec![0.0, 0.5]])
}

pub fn jordan2x2() -> OperatorMatrix {
    sup_operator(&[vec![1.0, 1.0], vec![0.0, 1.0]])
}

/// Diagonalizable Markov matrix with eigenvalues `1, 1/2, 0`.
pub fn markov3x3() -> OperatorMatrix {
    sup_operator(&[
        vec![0.5, 0.5, 0.0],
        vec![0.25, 0.5, 0.25],
        vec![0.0, 0.5, 0.5],
    ])
}

pub struct NamedOperator {
    pub name: &'static str,
    pub summary: &'static str,
    pub defaults: fn() -> Params,
}

fn no_params() -> Params {
    Params::new()
}

fn chain_params() -> Params {
    let mut p = Params::new();
    p.insert("n".into(), json!(64));
    p
}

fn subgroup_params() -> Params {
    let mut p = Params::new();
    p.insert("q".into(), json!(4));
    p.insert("n".into(), json!(128));
    p
}

fn identity_params() -> Params {
    let mut p = Params::new();
    p.insert("n".into(), json!(3));
    p
}

pub static OPERATORS: &[NamedOperator] = &[
    NamedOperator { name: "fixed_space_3x3", summary: "Markov matrix with a non-sublattice fixed space", defaults: no_params },
    NamedOperator { name: "no_daec_4x4", summary: "spectrum {-1, 1}, no dominated eigenvector at -1", defaults: no_params },
    NamedOperator { name: "swap", summary: "2x2 transposition", defaults: no_params },
    NamedOperator { name: "diag_half", summary: "diag(1, 1/2)", defaults: no_params },
    NamedOperator { name: "jordan2x2", summary: "Jordan block at 1", defaults: no_params },
    NamedOperator { name: "markov3x3", summary: "diagonalizable Markov matrix, eigenvalues 1, 1/2, 0", defaults: no_params },
    NamedOperator { name: "identity", summary: "identity of size n", defaults: identity_params },
    NamedOperator {
        name: "one_point_compactification",
        summary: "Z_4 plus a chain of length n and a point at infinity, with the continuity constraint",
        defaults: chain_params,
    },
    NamedOperator {
        name: "vanishing_at_infinity",
        summary: "Z_4 plus a chain of length n, constrained to vanish at the end",
        defaults: chain_params,
    },
    NamedOperator { name: "subgroup", summary: "averaged-tail operator on Z_q plus n chain states", defaults: subgroup_params },
];

/// Builds a registered operator, with its constraint rows if it has any.
pub fn named_operator(name: &str, overrides: &Params) -> Result<(OperatorMatrix, Option<DMatrix<C64>>)> {
    let info = OPERATORS
        .iter()
        .find(|o| o.name == name)
        .ok_or_else(|| GalleryError::UnknownCase(name.to_string()))?;
    let mut p = (info.defaults)();
    for (k, v) in overrides {
        if !p.contains_key(k) {
            return Err(GalleryError::BadParam { key: k.clone(), reason: format!("not a parameter of {name}") });
        }
        p.insert(k.clone(), v.clone());
    }
    let plain = |t: OperatorMatrix| Ok((t, None));
    match name {
        "fixed_space_3x3" => plain(fixed_space_3x3()),
        "no_daec_4x4" => plain(no_daec_4x4()),
        "swap" => plain(swap()),
        "diag_half" => plain(diag_half()),
        "jordan2x2" => plain(jordan2x2()),
        "markov3x3" => plain(markov3x3()),
        "identity" => plain(OperatorMatrix::identity(SpaceModel::sup(get_usize(&p, "n")?))),
        "one_point_compactification" | "vanishing_at_infinity" => {
            let n = get_usize(&p, "n")?;
            let c = if name == "vanishing_at_infinity" {
                Compactification::vanishing(n)?
            } else {
                Compactification::one_point(n)?
            };
            Ok((c.operator, Some(c.constraint)))
        }
        "subgroup" => plain(SubgroupOperator::new(get_usize(&p, "q")?, get_usize(&p, "n")?)?.operator),
        _ => unreachable!("registered above"),
    }
}
