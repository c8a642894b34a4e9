//! Free Lie ring machinery on a Lyndon basis: the degree-n piece of the
//! free Lie ring on a module sits inside the n-th tensor power through
//! bracket expansions, and the lower-central quotients of the relation
//! subgroup are computed as coinvariants of that submodule.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::foxmagnus::magnus_matrix;
use crate::intlattice::{hnf_basis, rank, saturation, AbInvariants, IntMat, LatticeSolver};
use crate::presentations::EnumeratedPresentation;
use crate::zgmod::{
    coinvariants, induced_coinvariant_map, kernel_of_induced, tensor_power, CoinvariantMap,
    PresentedAbGroup, ZGMap, ZGModule,
};
use crate::{Error, Result};

/// A word strictly smaller than every proper suffix. These index the
/// basis of the degree-n piece of a free Lie ring.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct LyndonWord {
    letters: Vec<usize>,
}

fn is_lyndon(letters: &[usize]) -> bool {
    !letters.is_empty() && (1..letters.len()).all(|i| *letters < letters[i..])
}

impl LyndonWord {
    pub fn new(letters: Vec<usize>) -> Option<LyndonWord> {
        if is_lyndon(&letters) {
            Some(LyndonWord { letters })
        } else {
            None
        }
    }

    pub fn letters(&self) -> &[usize] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }
}

/// All Lyndon words of length exactly n over the alphabet 0..r, in
/// lexicographic order, by Duval's generation algorithm.
pub fn lyndon_words(r: usize, n: usize) -> Vec<LyndonWord> {
    assert!(r >= 1 && n >= 1);
    let mut out = Vec::new();
    let mut w = vec![0usize];
    loop {
        if w.len() == n {
            out.push(LyndonWord { letters: w.clone() });
        }
        let k = w.len();
        while w.len() < n {
            let c = w[w.len() % k];
            w.push(c);
        }
        while w.last() == Some(&(r - 1)) {
            w.pop();
        }
        match w.last_mut() {
            None => break,
            Some(last) => *last += 1,
        }
    }
    out
}

fn moebius(mut d: usize) -> i64 {
    let mut sign = 1i64;
    let mut p = 2;
    while p * p <= d {
        if d % p == 0 {
            d /= p;
            if d % p == 0 {
                return 0;
            }
            sign = -sign;
        }
        p += 1;
    }
    if d > 1 {
        sign = -sign;
    }
    sign
}

/// Rank of the degree-n piece of the free Lie ring on r generators:
/// (1/n) sum over d | n of moebius(d) r^{n/d}.
pub fn witt_number(r: usize, n: usize) -> usize {
    assert!(n >= 1);
    let mut sum: i128 = 0;
    for d in 1..=n {
        if n % d == 0 {
            sum += moebius(d) as i128 * (r as i128).pow((n / d) as u32);
        }
    }
    (sum / n as i128) as usize
}

fn kron_vec(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); a.len() * b.len()];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i * b.len() + j] = x * y;
        }
    }
    out
}

fn expand(letters: &[usize], r: usize) -> Vec<BigInt> {
    if letters.len() == 1 {
        let mut e = vec![BigInt::zero(); r];
        e[letters[0]] = BigInt::one();
        return e;
    }
    // standard factorization: the longest proper suffix that is Lyndon
    let split = (1..letters.len())
        .find(|&i| is_lyndon(&letters[i..]))
        .expect("every proper suffix ending is a single letter");
    let u = expand(&letters[..split], r);
    let v = expand(&letters[split..], r);
    let uv = kron_vec(&u, &v);
    let vu = kron_vec(&v, &u);
    uv.iter().zip(&vu).map(|(x, y)| x - y).collect()
}

/// Tensor expansion of the standard bracketing of a Lyndon word, as a
/// vector in the degree-|w| tensor power of Z^r (first factor major).
pub fn bracket_expansion(w: &LyndonWord, r: usize) -> Vec<BigInt> {
    assert!(w.letters.iter().all(|&c| c < r));
    expand(&w.letters, r)
}

/// Tensor expansion of the left-normed bracket ((x1, x2), ..., xk).
pub fn left_normed_expansion(letters: &[usize], r: usize) -> Vec<BigInt> {
    assert!(!letters.is_empty());
    let mut acc = {
        let mut e = vec![BigInt::zero(); r];
        e[letters[0]] = BigInt::one();
        e
    };
    for &c in &letters[1..] {
        let mut e = vec![BigInt::zero(); r];
        e[c] = BigInt::one();
        let xy = kron_vec(&acc, &e);
        let yx = kron_vec(&e, &acc);
        acc = xy.iter().zip(&yx).map(|(a, b)| a - b).collect();
    }
    acc
}

/// Lyndon basis of the degree-n piece of the free Lie ring on r
/// generators, with the expansion matrix realizing it inside the tensor
/// power. Construction re-checks the Witt count and the Z-linear
/// independence of the expansion columns.
pub struct LieBasis {
    pub degree: usize,
    pub alphabet: usize,
    pub words: Vec<LyndonWord>,
    pub expansions: IntMat,
}

pub fn lie_basis(r: usize, n: usize) -> Result<LieBasis> {
    let words = lyndon_words(r, n);
    if words.len() != witt_number(r, n) {
        return Err(Error::Internal(format!(
            "Lyndon enumeration of ({r}, {n}) disagrees with the Witt number"
        )));
    }
    let cols: Vec<Vec<BigInt>> = words.iter().map(|w| bracket_expansion(w, r)).collect();
    let expansions = IntMat::from_columns(r.pow(n as u32), &cols);
    if rank(&expansions) != words.len() {
        return Err(Error::Internal(format!(
            "bracket expansions of ({r}, {n}) are linearly dependent"
        )));
    }
    Ok(LieBasis { degree: n, alphabet: r, words, expansions })
}

/// The degree-n free Lie submodule of M^{⊗n}, with its inclusion. The
/// diagonal action preserves the bracket span, so the action on the
/// submodule is the unique integer solution of
/// inclusion·action_L(g) = action(g)·inclusion; a non-solvable column
/// signals an expansion bug, not an input condition.
pub fn free_lie_submodule(m: &ZGModule, n: usize, budget: usize) -> Result<(ZGModule, ZGMap)> {
    let r = m.rank();
    let ambient = r.pow(n as u32);
    if ambient > budget {
        return Err(Error::Budget { needed: ambient, budget });
    }
    let basis = lie_basis(r, n)?;
    let tensor_mod = tensor_power(m, n)?;
    let order = m.group().order();

    let w = basis.words.len();
    let mut actions = Vec::with_capacity(order);
    if w == 0 {
        for _ in 0..order {
            actions.push(IntMat::zeros(0, 0));
        }
    } else {
        let solver = LatticeSolver::new(&basis.expansions)?;
        for g in 0..order {
            let moved = tensor_mod.action(g).mul(&basis.expansions);
            let mut cols = Vec::with_capacity(w);
            for j in 0..w {
                let x = solver.solve(&moved.column(j)).ok_or_else(|| {
                    Error::Internal(format!(
                        "diagonal action of element {g} does not preserve the bracket span \
                         on basis word {j}"
                    ))
                })?;
                cols.push(x);
            }
            actions.push(IntMat::from_columns(w, &cols));
        }
    }
    let submodule = ZGModule::new(m.group().clone(), actions)?;
    let inclusion = ZGMap::new(submodule.clone(), tensor_mod, basis.expansions)?;
    Ok((submodule, inclusion))
}

fn relation_lie(
    ep: &EnumeratedPresentation,
    n: usize,
    budget: usize,
) -> Result<(ZGModule, ZGMap)> {
    let mu = magnus_matrix(&ep.group, &ep.quotient, &ep.schreier)?;
    free_lie_submodule(mu.source(), n, budget)
}

/// The n-th lower-central quotient of the relation subgroup, modulo the
/// ambient conjugation action: computed as the coinvariants of the free
/// Lie submodule of the relation module.
pub fn gamma_quotient(ep: &EnumeratedPresentation, n: usize, budget: usize) -> Result<PresentedAbGroup> {
    let (l, _) = relation_lie(ep, n, budget)?;
    Ok(coinvariants(&l, ep.quotient.images()))
}

/// The map induced on coinvariants by the inclusion of the free Lie
/// submodule into the tensor power of the relation module.
pub fn l_n_map(ep: &EnumeratedPresentation, n: usize, budget: usize) -> Result<CoinvariantMap> {
    let (_, inclusion) = relation_lie(ep, n, budget)?;
    induced_coinvariant_map(&inclusion, ep.quotient.images())
}

/// The composition of l_n with the tensor power of the Magnus embedding,
/// landing in the coinvariants of the tensor power of the free module.
pub fn phi_n_map(ep: &EnumeratedPresentation, n: usize, budget: usize) -> Result<CoinvariantMap> {
    let d = ep.presentation.num_generators();
    let m = ep.group.order();
    let needed = (d * m).pow(n as u32);
    if needed > budget {
        return Err(Error::Budget { needed, budget });
    }
    let mu = magnus_matrix(&ep.group, &ep.quotient, &ep.schreier)?;
    let (_, inclusion) = free_lie_submodule(mu.source(), n, budget)?;
    let mut power = IntMat::identity(1);
    for _ in 0..n {
        power = power.kron(mu.matrix());
    }
    let matrix = power.mul(inclusion.matrix());
    let source = coinvariants(inclusion.source(), ep.quotient.images());
    let target = coinvariants(&tensor_power(mu.target(), n)?, ep.quotient.images());
    CoinvariantMap::new(matrix, source, target)
}

/// J_n = ker l_n.
pub fn j_n(ep: &EnumeratedPresentation, n: usize, budget: usize) -> Result<AbInvariants> {
    let cm = l_n_map(ep, n, budget)?;
    Ok(kernel_of_induced(&cm)?.invariants().clone())
}

/// Torsion facts about the lower-central quotients, each verified by
/// explicit lattice membership of kernel generators.
pub struct TorsionReport {
    pub n: usize,
    pub j_n: AbInvariants,
    pub ker_phi: AbInvariants,
    pub gamma: AbInvariants,
    /// n·x dies in the gamma quotient for every generator x of J_n.
    pub j_n_is_n_torsion: bool,
    /// l_n maps ker phi_n into the n-torsion of the tensor coinvariants.
    pub image_in_n_torsion: bool,
    /// ker phi_n is exactly the torsion subgroup of the gamma quotient.
    pub ker_phi_is_torsion_subgroup: bool,
    /// The exponent bound: n·x = 0 on ker phi_n, with 4 in place of 2
    /// when n = 2.
    pub exponent_bound_holds: bool,
}

fn kills(lattice: &LatticeSolver, column: &[BigInt], e: u64) -> bool {
    let scaled: Vec<BigInt> = column.iter().map(|v| v * BigInt::from(e)).collect();
    lattice.contains(&scaled)
}

pub fn torsion_report(ep: &EnumeratedPresentation, n: usize, budget: usize) -> Result<TorsionReport> {
    assert!(n >= 2, "the torsion statements start in degree 2");
    let l_cm = l_n_map(ep, n, budget)?;
    let source = l_cm.source().clone();
    let source_lattice = LatticeSolver::new(&hnf_basis(&source.rel_cols()))?;
    let gamma = source.invariants().clone();

    let j_kernel = kernel_of_induced(&l_cm)?;
    let j_inv = j_kernel.invariants().clone();
    for j in 0..j_kernel.generators().cols() {
        if !kills(&source_lattice, &j_kernel.generators().column(j), n as u64) {
            return Err(Error::Internal(format!(
                "generator {j} of ker l_{n} is not {n}-torsion"
            )));
        }
    }

    let phi_cm = phi_n_map(ep, n, budget)?;
    let phi_kernel = kernel_of_induced(&phi_cm)?;
    let ker_phi = phi_kernel.invariants().clone();

    let target_lattice = LatticeSolver::new(&hnf_basis(&l_cm.target().rel_cols()))?;
    for j in 0..phi_kernel.generators().cols() {
        let image = l_cm.matrix().mul_vec(&phi_kernel.generators().column(j));
        if !kills(&target_lattice, &image, n as u64) {
            return Err(Error::Internal(format!(
                "l_{n} image of ker phi generator {j} is not {n}-torsion"
            )));
        }
    }

    let torsion_preimage = saturation(&source.rel_cols())?;
    if !crate::intlattice::lattices_equal(phi_kernel.preimage(), &torsion_preimage)? {
        return Err(Error::Internal(format!(
            "ker phi_{n} is not the torsion subgroup of the degree-{n} quotient"
        )));
    }

    let bound = if n == 2 { 4 } else { n as u64 };
    for j in 0..phi_kernel.generators().cols() {
        if !kills(&source_lattice, &phi_kernel.generators().column(j), bound) {
            return Err(Error::Internal(format!(
                "generator {j} of ker phi_{n} survives multiplication by {bound}"
            )));
        }
    }

    Ok(TorsionReport {
        n,
        j_n: j_inv,
        ker_phi,
        gamma,
        j_n_is_n_torsion: true,
        image_in_n_torsion: true,
        ker_phi_is_torsion_subgroup: true,
        exponent_bound_holds: true,
    })
}
