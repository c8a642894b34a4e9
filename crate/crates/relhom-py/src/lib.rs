//! Python bindings: a single `GroupPresentation` class exposing the
//! homology, lower-central, and verification entry points. Invariant
//! factors cross the boundary as `(free_rank, [torsion...])` tuples.

use num_traits::ToPrimitive;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use relhom::foxmagnus::verify_relation_sequence;
use relhom::freelie::{gamma_quotient, j_n};
use relhom::homology::{bar_homology, five_term, h1_trivial, h_even, h_odd, hopf_h2};
use relhom::intlattice::{lattices_equal, AbInvariants};
use relhom::prescat::equalizer_limit;
use relhom::presentations::{enumerate_presentation, parse_presentation, EnumeratedPresentation};
use relhom::zgmod::trivial_module;

const DEFAULT_BUDGET: usize = relhom::homology::DEFAULT_BUDGET;

fn math_err(e: relhom::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn tuple_of(inv: &AbInvariants) -> (usize, Vec<u64>) {
    let torsion = inv
        .torsion
        .iter()
        .map(|d| d.to_u64().expect("torsion order exceeds u64"))
        .collect();
    (inv.free_rank, torsion)
}

/// A finite presentation together with its enumerated Cayley table.
#[pyclass(unsendable)]
struct GroupPresentation {
    ep: EnumeratedPresentation,
}

#[pymethods]
impl GroupPresentation {
    /// Parse presentation text and enumerate the group it presents.
    #[new]
    #[pyo3(signature = (text, limit = 20_000))]
    fn new(text: &str, limit: usize) -> PyResult<Self> {
        let p = parse_presentation(text).map_err(math_err)?;
        let ep = enumerate_presentation(p, limit).map_err(math_err)?;
        Ok(GroupPresentation { ep })
    }

    fn order(&self) -> usize {
        self.ep.group.order()
    }

    fn generator_names(&self) -> Vec<String> {
        self.ep.presentation.names().to_vec()
    }

    /// Rank of the relation module: d*m - m + 1 free generators.
    fn relation_rank(&self) -> usize {
        self.ep.schreier.rank()
    }

    /// Integral homology H_k(G, Z) for any k the machinery reaches:
    /// abelianization at k = 1, relation-module kernels in even degrees,
    /// five-term cokernels in odd degrees.
    #[pyo3(signature = (k, budget = DEFAULT_BUDGET))]
    fn h(&self, k: usize, budget: usize) -> PyResult<(usize, Vec<u64>)> {
        if k == 0 {
            return Ok((1, Vec::new()));
        }
        if k == 1 {
            return Ok(tuple_of(&h1_trivial(&self.ep.presentation)));
        }
        let z = trivial_module(&self.ep.group, 1);
        let inv = if k % 2 == 0 {
            h_even(&self.ep, k / 2, &z, budget).map_err(math_err)?.invariants
        } else {
            h_odd(&self.ep, (k - 1) / 2, budget).map_err(math_err)?
        };
        Ok(tuple_of(&inv))
    }

    /// The degree-2 value through the exponent-matrix shortcut, for
    /// cross-checking h(2).
    fn hopf_h2(&self) -> PyResult<(usize, Vec<u64>)> {
        Ok(tuple_of(&hopf_h2(&self.ep).map_err(math_err)?))
    }

    /// Independent bar-resolution oracle for H_k(G, Z), k <= 4.
    #[pyo3(signature = (k, budget = DEFAULT_BUDGET))]
    fn bar_h(&self, k: usize, budget: usize) -> PyResult<(usize, Vec<u64>)> {
        let z = trivial_module(&self.ep.group, 1);
        Ok(tuple_of(&bar_homology(&z, k, budget).map_err(math_err)?))
    }

    /// Invariants of gamma_n R / [gamma_n R, F].
    #[pyo3(signature = (n, budget = DEFAULT_BUDGET))]
    fn gamma_quotient(&self, n: usize, budget: usize) -> PyResult<(usize, Vec<u64>)> {
        let g = gamma_quotient(&self.ep, n, budget).map_err(math_err)?;
        Ok(tuple_of(g.invariants()))
    }

    /// Invariants of the comparison kernel J_n.
    #[pyo3(signature = (n, budget = DEFAULT_BUDGET))]
    fn j_n(&self, n: usize, budget: usize) -> PyResult<(usize, Vec<u64>)> {
        Ok(tuple_of(&j_n(&self.ep, n, budget).map_err(math_err)?))
    }

    /// All four exactness checks of the relation sequence.
    fn verify_sequence(&self) -> PyResult<bool> {
        let report = verify_relation_sequence(&self.ep.group, &self.ep.quotient, &self.ep.schreier)
            .map_err(math_err)?;
        Ok(report.all_pass())
    }

    /// Both junction checks of the five-term sequence at tensor degree n.
    #[pyo3(signature = (n, budget = DEFAULT_BUDGET))]
    fn five_term_exact(&self, n: usize, budget: usize) -> PyResult<(bool, bool)> {
        let z = trivial_module(&self.ep.group, 1);
        let ft = five_term(&self.ep, &z, n, budget).map_err(math_err)?;
        Ok((ft.exact_at_coinvariants, ft.image_inside_h1))
    }

    /// Whether the doubling equalizer reproduces H_{2n}: equal invariants
    /// and equal generator lattices.
    #[pyo3(signature = (n, budget = DEFAULT_BUDGET))]
    fn equalizer_matches(&self, n: usize, budget: usize) -> PyResult<bool> {
        let z = trivial_module(&self.ep.group, 1);
        let eq = equalizer_limit(&self.ep, n, &z, budget).map_err(math_err)?;
        let h = h_even(&self.ep, n, &z, budget).map_err(math_err)?;
        let same = eq.invariants == h.invariants
            && lattices_equal(eq.preimage(), h.preimage()).map_err(math_err)?;
        Ok(same)
    }
}

#[pymodule]
fn relhom_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<GroupPresentation>()?;
    Ok(())
}
