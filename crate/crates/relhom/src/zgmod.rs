//! Integral representations of a finite group given by explicit action
//! matrices, their tensor products, and the coinvariants machinery built
//! on them: presented abelian quotients, maps induced on coinvariants,
//! kernels of induced maps, torsion subgroups, and the untwisting
//! isomorphism that trivializes coinvariants of modules with a free
//! factor.

use std::rc::Rc;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::intlattice::{
    cokernel_invariants, hnf_basis, kernel_basis, quotient_generators, smith, AbInvariants,
    IntMat, LatticeSolver,
};
use crate::presentations::CayleyGroup;
use crate::rng::SplitMix64;
use crate::{Error, Result};

/// A finite-rank free Z-module with a left action of a finite group, one
/// invertible integer matrix per group element. Construction checks the
/// identity acts as I, that every action is invertible, and the
/// homomorphism property action(g)·action(h) = action(gh); the latter two
/// are verified entrywise when m·rank² ≤ 10⁶ and on sampled columns
/// otherwise.
#[derive(Clone, Debug)]
pub struct ZGModule {
    group: Rc<CayleyGroup>,
    rank: usize,
    actions: Vec<IntMat>,
}

fn columns_agree(a: &IntMat, b: &IntMat, j: usize) -> bool {
    a.column(j) == b.column(j)
}

impl ZGModule {
    pub fn new(group: Rc<CayleyGroup>, actions: Vec<IntMat>) -> Result<Self> {
        let m = group.order();
        if actions.len() != m {
            return Err(Error::BadModuleAction(format!(
                "{} action matrices for a group of order {m}",
                actions.len()
            )));
        }
        let rank = actions[group.identity()].rows();
        for (g, a) in actions.iter().enumerate() {
            if a.rows() != rank || a.cols() != rank {
                return Err(Error::BadModuleAction(format!(
                    "action of element {g} is {}x{}, expected {rank}x{rank}",
                    a.rows(),
                    a.cols()
                )));
            }
        }
        if actions[group.identity()] != IntMat::identity(rank) {
            return Err(Error::BadModuleAction(
                "the identity element must act as the identity matrix".into(),
            ));
        }
        let full = m * rank * rank <= 1_000_000;
        if full {
            for g in 0..m {
                let gi = group.inv(g);
                if actions[g].mul(&actions[gi]) != IntMat::identity(rank) {
                    return Err(Error::BadModuleAction(format!(
                        "action of element {g} is not inverted by its inverse"
                    )));
                }
            }
            for g in 0..m {
                for h in 0..m {
                    if actions[g].mul(&actions[h]) != actions[group.mul(g, h)] {
                        return Err(Error::BadModuleAction(format!(
                            "action is not a homomorphism at ({g}, {h})"
                        )));
                    }
                }
            }
        } else if rank > 0 {
            let mut rng = SplitMix64::new(0x2d99_787a ^ (m as u64) ^ ((rank as u64) << 20));
            for _ in 0..100 + 10 * m {
                let g = rng.below(m);
                let h = rng.below(m);
                let j = rng.below(rank);
                let hv = actions[h].column(j);
                let ghv = actions[g].mul_vec(&hv);
                if ghv != actions[group.mul(g, h)].column(j) {
                    return Err(Error::BadModuleAction(format!(
                        "action is not a homomorphism at ({g}, {h}) on column {j}"
                    )));
                }
                let gi = group.inv(g);
                let giv = actions[gi].column(j);
                let mut e = vec![BigInt::zero(); rank];
                e[j] = BigInt::one();
                if actions[g].mul_vec(&giv) != e {
                    return Err(Error::BadModuleAction(format!(
                        "action of element {g} is not inverted by its inverse on column {j}"
                    )));
                }
            }
        }
        Ok(ZGModule { group, rank, actions })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn group(&self) -> &Rc<CayleyGroup> {
        &self.group
    }

    pub fn action(&self, g: usize) -> &IntMat {
        &self.actions[g]
    }

    fn same_group(&self, other: &ZGModule) -> bool {
        Rc::ptr_eq(&self.group, &other.group) || *self.group == *other.group
    }
}

/// The module Z^k with every element acting as the identity.
pub fn trivial_module(group: &Rc<CayleyGroup>, k: usize) -> ZGModule {
    let actions = vec![IntMat::identity(k); group.order()];
    ZGModule::new(Rc::clone(group), actions).expect("trivial actions validate")
}

/// (ZG)^k: rank m·k, element h acting as I_k tensored with the left
/// translation permutation a -> h·a. Basis index s·m + a is slot s,
/// group element a.
pub fn regular_free_module(group: &Rc<CayleyGroup>, k: usize) -> ZGModule {
    let m = group.order();
    let mut actions = Vec::with_capacity(m);
    for h in 0..m {
        let mut p = IntMat::zeros(m, m);
        for a in 0..m {
            p.set(group.mul(h, a), a, BigInt::one());
        }
        actions.push(IntMat::identity(k).kron(&p));
    }
    ZGModule::new(Rc::clone(group), actions).expect("translation actions validate")
}

/// Tensor product over Z with the diagonal action. Basis order is
/// lexicographic with the left factor major: (i, j) -> i·rank(n) + j.
pub fn tensor(m: &ZGModule, n: &ZGModule) -> Result<ZGModule> {
    if !m.same_group(n) {
        return Err(Error::GroupMismatch);
    }
    let actions = (0..m.group.order())
        .map(|g| m.action(g).kron(n.action(g)))
        .collect();
    ZGModule::new(Rc::clone(&m.group), actions)
}

/// n-th tensor power; the empty power is the trivial rank-1 module.
pub fn tensor_power(m: &ZGModule, n: usize) -> Result<ZGModule> {
    let mut acc = trivial_module(&m.group, 1);
    for _ in 0..n {
        acc = tensor(&acc, m)?;
    }
    Ok(acc)
}

/// An integer matrix that intertwines two module actions. Equivariance
/// matrix·action_src(g) = action_tgt(g)·matrix is checked for every group
/// element at construction.
#[derive(Clone, Debug)]
pub struct ZGMap {
    source: ZGModule,
    target: ZGModule,
    matrix: IntMat,
}

impl ZGMap {
    pub fn new(source: ZGModule, target: ZGModule, matrix: IntMat) -> Result<Self> {
        if !source.same_group(&target) {
            return Err(Error::GroupMismatch);
        }
        if matrix.rows() != target.rank() || matrix.cols() != source.rank() {
            return Err(Error::Dimension(format!(
                "map is {}x{}, modules have ranks {} -> {}",
                matrix.rows(),
                matrix.cols(),
                source.rank(),
                target.rank()
            )));
        }
        for g in 0..source.group.order() {
            let lhs = matrix.mul(source.action(g));
            let rhs = target.action(g).mul(&matrix);
            if lhs != rhs {
                let col = (0..source.rank())
                    .find(|&j| !columns_agree(&lhs, &rhs, j))
                    .unwrap_or(0);
                return Err(Error::NotEquivariant { element: g, column: col });
            }
        }
        Ok(ZGMap { source, target, matrix })
    }

    pub fn source(&self) -> &ZGModule {
        &self.source
    }

    pub fn target(&self) -> &ZGModule {
        &self.target
    }

    pub fn matrix(&self) -> &IntMat {
        &self.matrix
    }
}

/// A finitely generated abelian group presented as Z^ambient modulo the
/// row span of a relation matrix. Invariant factors are computed once at
/// construction.
#[derive(Clone, Debug)]
pub struct PresentedAbGroup {
    ambient: usize,
    relations: IntMat,
    invariants: AbInvariants,
}

impl PresentedAbGroup {
    pub fn new(ambient: usize, relations: IntMat) -> Result<Self> {
        if relations.cols() != ambient {
            return Err(Error::Dimension(format!(
                "relations have {} columns in ambient Z^{ambient}",
                relations.cols()
            )));
        }
        let invariants = cokernel_invariants(&relations);
        Ok(PresentedAbGroup { ambient, relations, invariants })
    }

    /// Z^n with no relations.
    pub fn free(n: usize) -> Self {
        PresentedAbGroup::new(n, IntMat::zeros(0, n)).expect("free presentation validates")
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn relations(&self) -> &IntMat {
        &self.relations
    }

    /// The relation lattice as columns, the orientation the lattice
    /// operations want.
    pub fn rel_cols(&self) -> IntMat {
        self.relations.transpose()
    }

    pub fn invariants(&self) -> &AbInvariants {
        &self.invariants
    }
}

/// Coinvariants H_0(G, M): the ambient Z^rank modulo the rows
/// (action(g) - I)·e_i for g over the supplied generating set. Generators
/// suffice because (gh - 1) = g(h - 1) + (g - 1) telescopes every element
/// relation into generator relations inside the lattice.
pub fn coinvariants(m: &ZGModule, generators: &[usize]) -> PresentedAbGroup {
    let rank = m.rank();
    let blocks: Vec<IntMat> = generators
        .iter()
        .map(|&g| m.action(g).sub(&IntMat::identity(rank)).transpose())
        .collect();
    let refs: Vec<&IntMat> = blocks.iter().collect();
    let relations = if refs.is_empty() {
        IntMat::zeros(0, rank)
    } else {
        IntMat::vstack(&refs)
    };
    PresentedAbGroup::new(rank, relations).expect("coinvariant presentation validates")
}

/// A matrix read as a map between presented abelian groups. Construction
/// asserts well-definedness: the matrix carries the source relation
/// lattice into the target relation lattice.
#[derive(Clone, Debug)]
pub struct CoinvariantMap {
    matrix: IntMat,
    source: PresentedAbGroup,
    target: PresentedAbGroup,
}

impl CoinvariantMap {
    pub fn new(
        matrix: IntMat,
        source: PresentedAbGroup,
        target: PresentedAbGroup,
    ) -> Result<Self> {
        if matrix.cols() != source.ambient() || matrix.rows() != target.ambient() {
            return Err(Error::Dimension(format!(
                "map is {}x{} between ambients {} -> {}",
                matrix.rows(),
                matrix.cols(),
                source.ambient(),
                target.ambient()
            )));
        }
        // Containment is a span property, so check it on the Hermite basis
        // of the source lattice; only hunt for a witness row on failure.
        let target_solver = LatticeSolver::new(&hnf_basis(&target.rel_cols()))?;
        let src_basis = hnf_basis(&source.rel_cols());
        let image = matrix.mul(&src_basis);
        if !target_solver.contains_all_columns(&image) {
            let row = (0..source.relations().rows())
                .find(|&i| {
                    let r = source.relations().row(i);
                    !target_solver.contains(&matrix.mul_vec(&r))
                })
                .unwrap_or(0);
            return Err(Error::NotWellDefined { row });
        }
        Ok(CoinvariantMap { matrix, source, target })
    }

    pub fn matrix(&self) -> &IntMat {
        &self.matrix
    }

    pub fn source(&self) -> &PresentedAbGroup {
        &self.source
    }

    pub fn target(&self) -> &PresentedAbGroup {
        &self.target
    }
}

/// The map a ZGMap induces on coinvariants: the same matrix between the
/// two coinvariant presentations, with well-definedness asserted.
pub fn induced_coinvariant_map(f: &ZGMap, generators: &[usize]) -> Result<CoinvariantMap> {
    let source = coinvariants(f.source(), generators);
    let target = coinvariants(f.target(), generators);
    CoinvariantMap::new(f.matrix().clone(), source, target)
}

/// Kernel of a map between presented abelian groups, as a group together
/// with ambient lifts of its generators and the full preimage lattice
/// {x : matrix·x ∈ target relations}. Membership of an ambient vector's
/// class in the kernel is a lattice membership query against `preimage`.
pub struct InducedKernel {
    invariants: AbInvariants,
    generators: IntMat,
    preimage: IntMat,
    solver: LatticeSolver,
}

impl InducedKernel {
    pub fn invariants(&self) -> &AbInvariants {
        &self.invariants
    }

    /// One ambient column per invariant factor (torsion first, then free),
    /// matching the order inside `invariants`.
    pub fn generators(&self) -> &IntMat {
        &self.generators
    }

    /// Columns span {x : matrix·x lies in the target relation lattice}.
    pub fn preimage(&self) -> &IntMat {
        &self.preimage
    }

    /// Does the class of this ambient vector lie in the kernel?
    pub fn contains(&self, x: &[BigInt]) -> bool {
        self.solver.contains(x)
    }
}

/// Compute the kernel of an induced map: the preimage lattice of the
/// target relations, modulo the source relations. The preimage is cut out
/// by congruence conditions read off the Smith form of the target lattice
/// (row i of U·matrix vanishes mod d_i, exactly beyond the rank), so only
/// one kernel computation on a condition matrix is needed. Every returned
/// generator is re-checked to land in the target lattice.
pub fn kernel_of_induced(cm: &CoinvariantMap) -> Result<InducedKernel> {
    let a = cm.source().ambient();
    let rel_b = hnf_basis(&cm.target().rel_cols());
    let sfb = smith(&rel_b)?;
    let y = sfb.u.mul(cm.matrix());
    let b_rows = rel_b.rows();

    let mut aug: Vec<(usize, BigInt)> = Vec::new();
    for i in 0..sfb.rank {
        if !sfb.diag[i].is_one() {
            aug.push((i, sfb.diag[i].clone()));
        }
    }
    let exact: Vec<usize> = (sfb.rank..b_rows).collect();
    let mut cond = IntMat::zeros(aug.len() + exact.len(), a + aug.len());
    for (out, (i, d)) in aug.iter().enumerate() {
        for (j, v) in y.row_entries(*i) {
            cond.set(out, j, v.clone());
        }
        cond.set(out, a + out, -d.clone());
    }
    for (out, i) in exact.iter().enumerate() {
        for (j, v) in y.row_entries(*i) {
            cond.set(aug.len() + out, j, v.clone());
        }
    }

    let ker = kernel_basis(&cond)?;
    let ambient_rows: Vec<usize> = (0..a).collect();
    let preimage = hnf_basis(&ker.take_rows(&ambient_rows));
    let solver = LatticeSolver::new(&preimage)?;

    // Source relations expressed in preimage coordinates; a failed solve
    // here means the map was not well defined after all.
    let src_basis = hnf_basis(&cm.source().rel_cols());
    let mut w_cols: Vec<Vec<BigInt>> = Vec::new();
    for j in 0..src_basis.cols() {
        let col = src_basis.column(j);
        let w = solver.solve(&col).ok_or_else(|| {
            Error::Internal("source relation escapes the preimage lattice".into())
        })?;
        w_cols.push(w);
    }
    let wmat = IntMat::from_columns(preimage.cols(), &w_cols);
    let (invariants, gens_in_p) = quotient_generators(&hnf_basis(&wmat))?;
    let generators = preimage.mul(&gens_in_p);

    let b_solver = LatticeSolver::new(&rel_b)?;
    for j in 0..generators.cols() {
        let image = cm.matrix().mul_vec(&generators.column(j));
        if !b_solver.contains(&image) {
            return Err(Error::Internal(format!(
                "kernel generator {j} does not map into the target lattice"
            )));
        }
    }
    Ok(InducedKernel { invariants, generators, preimage, solver })
}

/// The n-torsion subgroup {x : n·x ∈ relations}/relations of a presented
/// abelian group, via the kernel of multiplication by n as a self-map.
pub fn n_torsion(p: &PresentedAbGroup, n: u64) -> Result<InducedKernel> {
    assert!(n >= 1, "torsion exponent must be positive");
    let matrix = IntMat::identity(p.ambient()).scale(&BigInt::from(n));
    let cm = CoinvariantMap::new(matrix, p.clone(), p.clone())?;
    kernel_of_induced(&cm)
}

/// The untwisting chart for a module with a free factor: coinvariants of
/// M ⊗ (ZG)^k are free of rank rank(M)·k, via [v ⊗ a·e_s] -> a⁻¹·v in
/// slot s. Returns the tensor module and the chart matrix W from its
/// ambient onto Z^{rank(M)·k} (row index s·rank(M) + i). Verified here:
/// W kills every coinvariant relation, the coinvariants are free of the
/// right rank, and W is onto, which together force the induced map to be
/// an isomorphism.
pub fn untwist_free_coinvariants(
    m: &ZGModule,
    k: usize,
    generators: &[usize],
) -> Result<(ZGModule, IntMat)> {
    let group = Rc::clone(m.group());
    let order = group.order();
    let nm = m.rank();
    let free = regular_free_module(&group, k);
    let tensor_mod = tensor(m, &free)?;

    let mut w = IntMat::zeros(k * nm, nm * k * order);
    for j in 0..nm {
        for s in 0..k {
            for a in 0..order {
                let col = j * (k * order) + s * order + a;
                let inv_col = m.action(group.inv(a)).column(j);
                for (i, v) in inv_col.iter().enumerate() {
                    if !v.is_zero() {
                        w.set(s * nm + i, col, v.clone());
                    }
                }
            }
        }
    }

    let coinv = coinvariants(&tensor_mod, generators);
    for g in generators {
        let drift = w.mul(&tensor_mod.action(*g)).sub(&w);
        if !drift.is_zero_matrix() {
            return Err(Error::Internal(format!(
                "untwist chart is not constant on the orbit of generator image {g}"
            )));
        }
    }
    if *coinv.invariants() != AbInvariants::free(k * nm) {
        return Err(Error::Internal(format!(
            "coinvariants of a free-factor module came out as {}",
            coinv.invariants()
        )));
    }
    if !cokernel_invariants(&w.transpose()).is_trivial() {
        return Err(Error::Internal("untwist chart is not onto".into()));
    }
    Ok((tensor_mod, w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intlattice::lattices_equal;
    use crate::presentations::{enumerate_presentation, parse_presentation};

    fn bi(v: i64) -> BigInt {
        BigInt::from(v)
    }

    fn group_of(text: &str) -> (Rc<CayleyGroup>, Vec<usize>) {
        let p = parse_presentation(text).unwrap();
        let ep = enumerate_presentation(p, 20_000).unwrap();
        (ep.group, ep.quotient.images().to_vec())
    }

    fn c2() -> (Rc<CayleyGroup>, Vec<usize>) {
        group_of("gens: x\nrels: x^2\n")
    }

    fn c3() -> (Rc<CayleyGroup>, Vec<usize>) {
        group_of("gens: x\nrels: x^3\n")
    }

    fn s3() -> (Rc<CayleyGroup>, Vec<usize>) {
        group_of("gens: x, y\nrels: x^2, y^2, (x y)^3\n")
    }

    #[test]
    fn left_translation_orientation() {
        // Left action canary: in C3 the generator translates e_a to
        // e_{1+a}, so its matrix is the 3-cycle with ones below the
        // diagonal. A right-action bug flips this transpose-wise.
        let (g, gens) = c3();
        let reg = regular_free_module(&g, 1);
        let expected = IntMat::from_rows(3, &[vec![0, 0, 1], vec![1, 0, 0], vec![0, 1, 0]]);
        assert_eq!(reg.action(gens[0]), &expected);
    }

    #[test]
    fn regular_module_of_c2_swaps() {
        let (g, gens) = c2();
        let reg = regular_free_module(&g, 1);
        assert_eq!(reg.rank(), 2);
        let swap = IntMat::from_rows(2, &[vec![0, 1], vec![1, 0]]);
        assert_eq!(reg.action(gens[0]), &swap);
    }

    #[test]
    fn tensor_of_regulars_has_two_transpositions() {
        let (g, gens) = c2();
        let reg = regular_free_module(&g, 1);
        let t = tensor(&reg, &reg).unwrap();
        assert_eq!(t.rank(), 4);
        // swap tensor swap: (i, j) -> (1-i, 1-j), the permutation (0 3)(1 2)
        let expected = IntMat::from_rows(
            4,
            &[
                vec![0, 0, 0, 1],
                vec![0, 0, 1, 0],
                vec![0, 1, 0, 0],
                vec![1, 0, 0, 0],
            ],
        );
        assert_eq!(t.action(gens[0]), &expected);
    }

    #[test]
    fn tensor_unit_and_powers() {
        let (g, _) = s3();
        let reg = regular_free_module(&g, 1);
        let unit = tensor(&trivial_module(&g, 1), &reg).unwrap();
        for el in 0..g.order() {
            assert_eq!(unit.action(el), reg.action(el));
        }
        assert_eq!(tensor_power(&reg, 0).unwrap().rank(), 1);
        assert_eq!(tensor_power(&reg, 2).unwrap().rank(), 36);
        let triv = trivial_module(&g, 5);
        assert_eq!(tensor_power(&triv, 3).unwrap().rank(), 125);
    }

    #[test]
    fn tensor_rejects_group_mismatch() {
        let (g2, _) = c2();
        let (g3, _) = c3();
        let a = trivial_module(&g2, 1);
        let b = trivial_module(&g3, 1);
        assert!(matches!(tensor(&a, &b), Err(Error::GroupMismatch)));
    }

    #[test]
    fn zero_rank_modules_are_fine() {
        let (g, gens) = c2();
        let z = trivial_module(&g, 0);
        assert_eq!(z.rank(), 0);
        let t = tensor(&z, &regular_free_module(&g, 1)).unwrap();
        assert_eq!(t.rank(), 0);
        let coinv = coinvariants(&t, &gens);
        assert!(coinv.invariants().is_trivial());
    }

    #[test]
    fn module_validation_rejects_non_homomorphisms() {
        let (g, _) = c2();
        // order-2 group cannot act by a matrix of infinite order
        let shear = IntMat::from_rows(2, &[vec![1, 1], vec![0, 1]]);
        let bad = ZGModule::new(Rc::clone(&g), vec![IntMat::identity(2), shear]);
        assert!(matches!(bad, Err(Error::BadModuleAction(_))));
    }

    #[test]
    fn coinvariants_of_regular_is_z() {
        let (g, gens) = c2();
        let reg = regular_free_module(&g, 1);
        let coinv = coinvariants(&reg, &gens);
        assert_eq!(coinv.invariants(), &AbInvariants::free(1));
        // relation rows are the columns of action(g) - I
        assert_eq!(
            coinv.relations(),
            &IntMat::from_rows(2, &[vec![-1, 1], vec![1, -1]])
        );
    }

    #[test]
    fn coinvariants_of_trivial_is_free() {
        let (g, gens) = s3();
        let coinv = coinvariants(&trivial_module(&g, 3), &gens);
        assert_eq!(coinv.invariants(), &AbInvariants::free(3));
    }

    #[test]
    fn coinvariants_from_generators_match_all_elements() {
        for text in [
            "gens: x\nrels: x^4\n",
            "gens: x, y\nrels: x^2, y^2, [x, y]\n",
            "gens: x, y\nrels: x^2, y^2, (x y)^3\n",
        ] {
            let (g, gens) = group_of(text);
            let all: Vec<usize> = (0..g.order()).collect();
            let reg = regular_free_module(&g, 1);
            for m in [
                trivial_module(&g, 2),
                reg.clone(),
                tensor(&reg, &reg).unwrap(),
            ] {
                let a = coinvariants(&m, &gens);
                let b = coinvariants(&m, &all);
                assert_eq!(a.invariants(), b.invariants());
                assert!(lattices_equal(&a.rel_cols(), &b.rel_cols()).unwrap());
            }
        }
    }

    #[test]
    fn tensor_association_up_to_reindexing() {
        let (g, gens) = s3();
        let a = regular_free_module(&g, 1);
        let b = trivial_module(&g, 2);
        let c = tensor(&a, &a).unwrap();
        let left = tensor(&tensor(&a, &b).unwrap(), &c).unwrap();
        let right = tensor(&a, &tensor(&b, &c).unwrap()).unwrap();
        assert_eq!(
            coinvariants(&left, &gens).invariants(),
            coinvariants(&right, &gens).invariants()
        );
    }

    #[test]
    fn equivariance_is_enforced() {
        let (g, _) = c2();
        let triv = trivial_module(&g, 1);
        let reg = regular_free_module(&g, 1);
        // constant map into one slot of the regular module is not
        // equivariant
        let bad = IntMat::from_rows(1, &[vec![1], vec![0]]);
        match ZGMap::new(triv.clone(), reg.clone(), bad) {
            Err(Error::NotEquivariant { element, column }) => {
                assert_eq!(element, 1);
                assert_eq!(column, 0);
            }
            other => panic!("expected equivariance failure, got {other:?}"),
        }
        // the norm map 1 -> (1, 1) is equivariant
        let norm = IntMat::from_rows(1, &[vec![1], vec![1]]);
        assert!(ZGMap::new(triv, reg, norm).is_ok());
    }

    #[test]
    fn induced_map_multiplication_by_two_chart() {
        // The norm map Z -> ZG for C2 induces multiplication by 2 on
        // coinvariants once the free side is read through the untwist
        // chart.
        let (g, gens) = c2();
        let triv = trivial_module(&g, 1);
        let reg = regular_free_module(&g, 1);
        let norm = ZGMap::new(triv.clone(), reg, IntMat::from_rows(1, &[vec![1], vec![1]]))
            .unwrap();
        let cm = induced_coinvariant_map(&norm, &gens).unwrap();
        let (_tmod, w) = untwist_free_coinvariants(&triv, 1, &gens).unwrap();
        assert_eq!(w, IntMat::from_rows(2, &[vec![1, 1]]));
        let composite = w.mul(cm.matrix());
        assert_eq!(composite, IntMat::from_rows(1, &[vec![2]]));
        // and its kernel on coinvariants is trivial
        let ker = kernel_of_induced(&cm).unwrap();
        assert!(ker.invariants().is_trivial());
    }

    #[test]
    fn induced_map_rejects_ill_defined() {
        let z_mod_2 = PresentedAbGroup::new(1, IntMat::from_rows(1, &[vec![2]])).unwrap();
        let z = PresentedAbGroup::free(1);
        match CoinvariantMap::new(IntMat::identity(1), z_mod_2, z) {
            Err(Error::NotWellDefined { row }) => assert_eq!(row, 0),
            other => panic!("expected well-definedness failure, got {other:?}"),
        }
    }

    #[test]
    fn kernel_of_identity_is_trivial() {
        let p = PresentedAbGroup::new(2, IntMat::from_rows(2, &[vec![2, 0], vec![0, 3]]))
            .unwrap();
        let cm = CoinvariantMap::new(IntMat::identity(2), p.clone(), p).unwrap();
        let ker = kernel_of_induced(&cm).unwrap();
        assert!(ker.invariants().is_trivial());
    }

    #[test]
    fn kernel_preimage_of_doubling_into_z_mod_4() {
        // Z --2--> Z/4: preimage lattice is 2Z, kernel reports Z with
        // generator lift (2).
        let z = PresentedAbGroup::free(1);
        let z4 = PresentedAbGroup::new(1, IntMat::from_rows(1, &[vec![4]])).unwrap();
        let cm =
            CoinvariantMap::new(IntMat::from_rows(1, &[vec![2]]), z, z4).unwrap();
        let ker = kernel_of_induced(&cm).unwrap();
        assert_eq!(ker.invariants(), &AbInvariants::free(1));
        assert_eq!(ker.generators().to_dense(), vec![vec![bi(2)]]);
        assert!(ker.contains(&[bi(2)]));
        assert!(ker.contains(&[bi(-4)]));
        assert!(!ker.contains(&[bi(1)]));
    }

    #[test]
    fn kernel_with_torsion_answer() {
        // Z/4 --4--> Z/8 has kernel {0, 2} = Z/2.
        let z4 = PresentedAbGroup::new(1, IntMat::from_rows(1, &[vec![4]])).unwrap();
        let z8 = PresentedAbGroup::new(1, IntMat::from_rows(1, &[vec![8]])).unwrap();
        let cm = CoinvariantMap::new(IntMat::from_rows(1, &[vec![4]]), z4, z8).unwrap();
        let ker = kernel_of_induced(&cm).unwrap();
        assert_eq!(
            ker.invariants(),
            &AbInvariants { free_rank: 0, torsion: vec![bi(2)] }
        );
        assert!(ker.contains(&[bi(2)]));
        assert!(!ker.contains(&[bi(1)]));
    }

    #[test]
    fn kernel_into_free_target_is_plain_kernel() {
        // target Z^2 free: the induced kernel is the matrix kernel mod
        // source relations. Matrix (1, 1) as a row: kernel lattice is
        // spanned by (1, -1).
        let src = PresentedAbGroup::free(2);
        let tgt = PresentedAbGroup::free(1);
        let cm = CoinvariantMap::new(IntMat::from_rows(2, &[vec![1, 1]]), src, tgt).unwrap();
        let ker = kernel_of_induced(&cm).unwrap();
        assert_eq!(ker.invariants(), &AbInvariants::free(1));
        assert!(ker.contains(&[bi(3), bi(-3)]));
        assert!(!ker.contains(&[bi(1), bi(1)]));
    }

    #[test]
    fn n_torsion_of_mixed_group() {
        // Z + Z/4 + Z/3, n = 2: only the Z/4 factor contributes Z/2.
        let p = PresentedAbGroup::new(
            3,
            IntMat::from_rows(3, &[vec![0, 4, 0], vec![0, 0, 3]]),
        )
        .unwrap();
        let tor = n_torsion(&p, 2).unwrap();
        assert_eq!(
            tor.invariants(),
            &AbInvariants { free_rank: 0, torsion: vec![bi(2)] }
        );
        assert!(tor.contains(&[bi(0), bi(2), bi(0)]));
        assert!(tor.contains(&[bi(0), bi(2), bi(3)]));
        assert!(!tor.contains(&[bi(0), bi(1), bi(0)]));
        assert!(!tor.contains(&[bi(1), bi(0), bi(0)]));

        assert!(n_torsion(&p, 1).unwrap().invariants().is_trivial());
    }

    #[test]
    fn four_torsion_of_z_mod_6() {
        let p = PresentedAbGroup::new(1, IntMat::from_rows(1, &[vec![6]])).unwrap();
        let tor = n_torsion(&p, 4).unwrap();
        assert_eq!(
            tor.invariants(),
            &AbInvariants { free_rank: 0, torsion: vec![bi(2)] }
        );
        assert!(tor.contains(&[bi(3)]));
        assert!(!tor.contains(&[bi(2)]));
    }

    #[test]
    fn untwist_chart_on_regular_factors() {
        let (g, gens) = c3();
        let reg = regular_free_module(&g, 1);
        let (tmod, w) = untwist_free_coinvariants(&reg, 2, &gens).unwrap();
        assert_eq!(tmod.rank(), 18);
        assert_eq!(w.rows(), 6);
        assert_eq!(w.cols(), 18);
        // full injectivity proof: the kernel of the chart lies inside the
        // coinvariant relation lattice
        let coinv = coinvariants(&tmod, &gens);
        let ker = kernel_basis(&w).unwrap();
        let rel_solver = LatticeSolver::new(&hnf_basis(&coinv.rel_cols())).unwrap();
        assert!(rel_solver.contains_all_columns(&ker));
    }

    #[test]
    fn untwist_trivial_module_is_augmentation() {
        let (g, gens) = c2();
        let (_tmod, w) = untwist_free_coinvariants(&trivial_module(&g, 1), 1, &gens).unwrap();
        assert_eq!(w, IntMat::from_rows(2, &[vec![1, 1]]));
    }

    #[test]
    fn coinvariants_of_free_factor_are_torsion_free() {
        for text in ["gens: x\nrels: x^2\n", "gens: x, y\nrels: x^2, y^2, (x y)^3\n"] {
            let (g, gens) = group_of(text);
            let reg = regular_free_module(&g, 1);
            let m = tensor(&reg, &reg).unwrap();
            let t = tensor(&m, &regular_free_module(&g, 2)).unwrap();
            let coinv = coinvariants(&t, &gens);
            assert!(coinv.invariants().torsion.is_empty());
            assert_eq!(coinv.invariants().free_rank, m.rank() * 2);
        }
    }
}
