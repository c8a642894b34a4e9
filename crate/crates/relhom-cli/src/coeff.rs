//! Coefficient-module descriptors: a JSON file giving the rank and one
//! integer matrix per presentation generator. The generator matrices are
//! extended to the whole group along transversal words and then revalidated
//! as a genuine action, so a descriptor that violates the relations is
//! rejected rather than silently misused.

use num_bigint::BigInt;
use num_traits::One;
use relhom::intlattice::{smith, IntMat};
use relhom::presentations::EnumeratedPresentation;
use relhom::zgmod::ZGModule;
use serde::Deserialize;

use crate::CliError;

#[derive(Deserialize)]
struct Descriptor {
    rank: usize,
    /// One rank x rank matrix per presentation generator, in order.
    actions: Vec<Vec<Vec<i64>>>,
}

/// Inverse of a GL_n(Z) matrix via Smith form: U*A*V = I gives A^-1 = V*U.
fn integer_inverse(a: &IntMat) -> Option<IntMat> {
    let sf = smith(a).ok()?;
    if sf.rank != a.rows() || sf.diag.iter().any(|d| !d.is_one()) {
        return None;
    }
    Some(sf.v.mul(&sf.u))
}

pub fn load_module(text: &str, ep: &EnumeratedPresentation) -> Result<ZGModule, CliError> {
    let desc: Descriptor = serde_json::from_str(text)
        .map_err(|e| CliError::Config(format!("coefficient descriptor: {e}")))?;
    let d = ep.presentation.num_generators();
    if desc.actions.len() != d {
        return Err(CliError::Config(format!(
            "coefficient descriptor has {} action matrices for {d} generators",
            desc.actions.len()
        )));
    }
    let mut gen_actions = Vec::with_capacity(d);
    let mut gen_inverses = Vec::with_capacity(d);
    for (s, rows) in desc.actions.iter().enumerate() {
        if rows.len() != desc.rank || rows.iter().any(|r| r.len() != desc.rank) {
            return Err(CliError::Config(format!(
                "action matrix of generator {s} is not {0}x{0}",
                desc.rank
            )));
        }
        let mut a = IntMat::zeros(desc.rank, desc.rank);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0 {
                    a.set(i, j, BigInt::from(v));
                }
            }
        }
        let inv = integer_inverse(&a).ok_or_else(|| {
            CliError::Config(format!(
                "action matrix of generator {s} is not invertible over the integers"
            ))
        })?;
        gen_actions.push(a);
        gen_inverses.push(inv);
    }

    let m = ep.group.order();
    let mut actions = Vec::with_capacity(m);
    for g in 0..m {
        let mut a = IntMat::identity(desc.rank);
        for (s, inverted) in ep.schreier.transversal(g).flat() {
            let step = if inverted { &gen_inverses[s] } else { &gen_actions[s] };
            a = a.mul(step);
        }
        actions.push(a);
    }
    ZGModule::new(ep.group.clone(), actions).map_err(CliError::Math)
}
