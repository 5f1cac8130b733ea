use super::FeSpace;
use crate::sparse::SymmetricSparseOperator;
use crate::{Error, Result};

/// Stiffness and mass operators over all dofs (no Dirichlet elimination).
pub fn assemble_full(space: &FeSpace) -> Result<(SymmetricSparseOperator, SymmetricSparseOperator)> {
    let mesh = space.mesh();
    let n = space.n_dofs();
    let pairs = (0..mesh.n_elements()).flat_map(|t| {
        let dofs = space.element_dofs(t);
        dofs.iter().flat_map(move |&i| dofs.iter().map(move |&j| (i, j)))
    });
    let mut a = SymmetricSparseOperator::from_pattern(n, pairs);
    let mut m = a.clone();
    let basis = space.basis();
    for t in 0..mesh.n_elements() {
        let geo = space.geometry(t);
        if geo.area.is_nan() || geo.area <= 0.0 {
            return Err(Error::Assembly(format!("element {t} is degenerate (area {:e})", geo.area)));
        }
        let ka = basis.stiffness(geo);
        let km = basis.mass(geo);
        let dofs = space.element_dofs(t);
        for (li, &i) in dofs.iter().enumerate() {
            for (lj, &j) in dofs.iter().enumerate() {
                a.add(i, j, ka[li][lj]);
                m.add(i, j, km[li][lj]);
            }
        }
    }
    Ok((a, m))
}

/// Stiffness and mass operators restricted to the free dofs.
pub fn assemble(space: &FeSpace) -> Result<(SymmetricSparseOperator, SymmetricSparseOperator)> {
    let (a, m) = assemble_full(space)?;
    Ok((a.restrict(space.free_dofs()), m.restrict(space.free_dofs())))
}
