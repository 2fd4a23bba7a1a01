//! Cell and facet assembly of the monolithic residual and Newton Jacobian.
//!
//! Local dof order per cell concatenates the fields as (stress?, theta,
//! velocity, pressure) with components interleaved per scalar node. The
//! Jacobian is the exact linearization of the residual, including the
//! stress-law derivatives, the dissipation and buoyancy couplings, and the
//! derivative of the interior-penalty coefficient through the cellwise
//! velocity maximum.

use crate::fem::assemble::FacetRules;
use crate::fem::element::Tabulation;
use crate::fem::space::{physical_tabulation, CellGeometry};
use crate::fem::{quadrature_rule, CsrMatrix, FunctionSpace, PatternBuilder};
use crate::rheology::{contract, Sym2};
use crate::Real;

use super::{BlockSystem, Discretization, Formulation};

/// Voigt representations of the stress basis tensors.
fn stress_basis<T: Real>(traceless: bool) -> Vec<Sym2<T>> {
    if traceless {
        vec![
            [T::one(), -T::one(), T::zero()],
            [T::zero(), T::zero(), T::one()],
        ]
    } else {
        vec![
            [T::one(), T::zero(), T::zero()],
            [T::zero(), T::one(), T::zero()],
            [T::zero(), T::zero(), T::one()],
        ]
    }
}

/// D(phi e_c) in Voigt components.
#[inline]
fn strain_basis<T: Real>(g: [T; 2], c: usize) -> Sym2<T> {
    let half = T::of(0.5);
    if c == 0 {
        [g[0], T::zero(), half * g[1]]
    } else {
        [T::zero(), g[1], half * g[0]]
    }
}

#[inline]
fn matvec3<T: Real>(m: &[[T; 3]; 3], v: &Sym2<T>) -> Sym2<T> {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

/// Integral and domain area of a scalar discrete field.
pub(super) fn field_integral<T: Real>(space: &FunctionSpace<T>, coeffs: &[T]) -> (T, T) {
    let rule = quadrature_rule::<T>((2 * space.elem.degree.max(1)).min(20)).unwrap();
    let tab = space.basis.tabulate(&rule.points);
    let nb = tab.nb;
    let mut integral = T::zero();
    let mut area = T::zero();
    for c in 0..space.mesh.cells.len() {
        let geo = CellGeometry::new(&space.mesh, c);
        let dofs = space.cell_scalar_dofs(c);
        for q in 0..rule.points.len() {
            let w = rule.weights[q] * geo.det_j.abs();
            let mut v = T::zero();
            for (i, &s) in dofs.iter().enumerate() {
                v += coeffs[s] * tab.vals[q * nb + i];
            }
            integral += w * v;
            area += w;
        }
    }
    (integral, area)
}

struct FieldScratch<T> {
    /// reference tabulation at the volume rule
    ref_tab: Tabulation<T>,
    /// physical gradients for the current cell, [q*nb + i]
    grads: Vec<[T; 2]>,
    nb: usize,
}

impl<T: Real> FieldScratch<T> {
    fn new(space: &FunctionSpace<T>, pts: &[crate::mesh::Point2<T>]) -> Self {
        let ref_tab = space.basis.tabulate(pts);
        let nb = ref_tab.nb;
        let grads = vec![[T::zero(); 2]; ref_tab.vals.len()];
        Self { ref_tab, grads, nb }
    }

    fn update_cell(&mut self, geo: &CellGeometry<T>) {
        for (out, g) in self.grads.iter_mut().zip(&self.ref_tab.grads) {
            *out = geo.phys_grad(g);
        }
    }
}

impl<T: Real> Discretization<T> {
    /// Weak-form residual; Dirichlet rows hold (state value - boundary data).
    pub fn assemble_residual(&self, state: &[T]) -> Vec<T> {
        self.assemble_internal(state, false).0
    }

    /// Exact Newton Jacobian with symmetric Dirichlet elimination.
    pub fn assemble_jacobian(&self, state: &[T]) -> BlockSystem<T> {
        let (_, jac) = self.assemble_internal(state, true);
        let mut matrix = jac.unwrap();
        let bc: Vec<(usize, T)> = self.dirichlet.iter().map(|&(d, _)| (d, T::zero())).collect();
        let mut scratch = vec![T::zero(); self.ndof()];
        matrix.eliminate_dirichlet(&mut scratch, &bc);
        BlockSystem {
            matrix,
            p_offset: self.pressure_offset(),
            ndof: self.ndof(),
        }
    }

    pub(crate) fn assemble_internal_pub(&self, state: &[T]) -> (Vec<T>, CsrMatrix<T>) {
        let (r, j) = self.assemble_internal(state, true);
        (r, j.unwrap())
    }

    /// Residual and constrained Jacobian in one sweep.
    pub fn assemble_both(&self, state: &[T]) -> (BlockSystem<T>, Vec<T>) {
        let (residual, jac) = self.assemble_internal(state, true);
        let mut matrix = jac.unwrap();
        let bc: Vec<(usize, T)> = self.dirichlet.iter().map(|&(d, _)| (d, T::zero())).collect();
        let mut scratch = vec![T::zero(); self.ndof()];
        matrix.eliminate_dirichlet(&mut scratch, &bc);
        (
            BlockSystem {
                matrix,
                p_offset: self.pressure_offset(),
                ndof: self.ndof(),
            },
            residual,
        )
    }

    fn build_pattern(&self) -> CsrMatrix<T> {
        let n = self.ndof();
        let mut pattern = PatternBuilder::new(n, n);
        let ncells = self.mesh.cells.len();
        for c in 0..ncells {
            let dofs = self.cell_global_dofs(c);
            pattern.couple(&dofs, &dofs);
        }
        if self.stab.velocity_ip.is_some() || self.stab.temperature_ip.is_some() {
            for f in &self.mesh.interior_facets {
                let mut dofs = Vec::new();
                for &c in &f.cells {
                    let uf = &self.layout.fields[self.u_idx];
                    dofs.extend(
                        uf.space
                            .cell_full_dofs(c)
                            .into_iter()
                            .map(|d| d + uf.offset),
                    );
                    let tf = &self.layout.fields[self.theta_idx];
                    dofs.extend(
                        tf.space
                            .cell_full_dofs(c)
                            .into_iter()
                            .map(|d| d + tf.offset),
                    );
                }
                pattern.couple(&dofs, &dofs);
            }
        }
        pattern.ensure_diagonal();
        pattern.build()
    }

    /// Global dofs of one cell, all fields concatenated in layout order.
    pub fn cell_global_dofs(&self, cell: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for f in &self.layout.fields {
            out.extend(f.space.cell_full_dofs(cell).into_iter().map(|d| d + f.offset));
        }
        out
    }

    fn assemble_internal(&self, state: &[T], want_jac: bool) -> (Vec<T>, Option<CsrMatrix<T>>) {
        assert_eq!(state.len(), self.ndof(), "state length matches layout");
        let n = self.ndof();
        let mut residual = vec![T::zero(); n];
        let mut jac = if want_jac {
            Some(self.build_pattern())
        } else {
            None
        };

        let rule = quadrature_rule::<T>(self.quad_exactness).unwrap();
        let nq = rule.points.len();
        let co = self.active_coeffs();
        let four_field = self.config.formulation == Formulation::FourField;
        let sb: Vec<Sym2<T>> = stress_basis(self.config.stress_traceless);
        let ncs = sb.len();

        // per-field scratch tabulations
        let mut scr: Vec<FieldScratch<T>> = self
            .layout
            .fields
            .iter()
            .map(|f| FieldScratch::new(&f.space, &rule.points))
            .collect();

        let nloc: usize = self
            .layout
            .fields
            .iter()
            .map(|f| f.space.nbasis_scalar() * f.space.elem.ncomp())
            .collect::<Vec<_>>()
            .iter()
            .sum();
        let mut loff = Vec::with_capacity(self.layout.fields.len());
        {
            let mut acc = 0;
            for f in &self.layout.fields {
                loff.push(acc);
                acc += f.space.nbasis_scalar() * f.space.elem.ncomp();
            }
        }
        let s_lo = self.stress_idx.map(|i| loff[i]);
        let t_lo = loff[self.theta_idx];
        let u_lo = loff[self.u_idx];
        let p_lo = loff[self.p_idx];

        let mut floc = vec![T::zero(); nloc];
        let mut jloc = vec![T::zero(); nloc * nloc];

        let half = T::of(0.5);
        let two = T::of(2.0);

        for cell in 0..self.mesh.cells.len() {
            let geo = CellGeometry::new(&self.mesh, cell);
            for s in scr.iter_mut() {
                s.update_cell(&geo);
            }
            let gdofs = self.cell_global_dofs(cell);
            floc.iter_mut().for_each(|v| *v = T::zero());
            if want_jac {
                jloc.iter_mut().for_each(|v| *v = T::zero());
            }

            let sdofs_s = self
                .stress_idx
                .map(|i| self.layout.fields[i].space.cell_scalar_dofs(cell));
            let sdofs_t = self.layout.fields[self.theta_idx]
                .space
                .cell_scalar_dofs(cell);
            let sdofs_u = self.layout.fields[self.u_idx].space.cell_scalar_dofs(cell);
            let sdofs_p = self.layout.fields[self.p_idx].space.cell_scalar_dofs(cell);
            let off_s = self.stress_idx.map(|i| self.layout.fields[i].offset);
            let off_t = self.layout.fields[self.theta_idx].offset;
            let off_u = self.layout.fields[self.u_idx].offset;
            let off_p = self.layout.fields[self.p_idx].offset;
            let nb_s = self.stress_idx.map(|i| scr[i].nb).unwrap_or(0);
            let nb_t = scr[self.theta_idx].nb;
            let nb_u = scr[self.u_idx].nb;
            let nb_p = scr[self.p_idx].nb;

            for q in 0..nq {
                let w = rule.weights[q] * geo.det_j.abs();
                let pq = geo.map(&rule.points[q]);

                // field values at the quadrature point
                let mut th = T::zero();
                let mut gth = [T::zero(); 2];
                {
                    let sc = &scr[self.theta_idx];
                    for (i, &sd) in sdofs_t.iter().enumerate() {
                        let c = state[off_t + sd];
                        th += c * sc.ref_tab.vals[q * nb_t + i];
                        let g = sc.grads[q * nb_t + i];
                        gth[0] += c * g[0];
                        gth[1] += c * g[1];
                    }
                }
                let mut u = [T::zero(); 2];
                let mut gu = [[T::zero(); 2]; 2]; // gu[c][a] = d_a u_c
                {
                    let sc = &scr[self.u_idx];
                    for (i, &sd) in sdofs_u.iter().enumerate() {
                        let phi = sc.ref_tab.vals[q * nb_u + i];
                        let g = sc.grads[q * nb_u + i];
                        for c in 0..2 {
                            let cv = state[off_u + sd * 2 + c];
                            u[c] += cv * phi;
                            gu[c][0] += cv * g[0];
                            gu[c][1] += cv * g[1];
                        }
                    }
                }
                let dv: Sym2<T> = [gu[0][0], gu[1][1], half * (gu[0][1] + gu[1][0])];
                let divu = gu[0][0] + gu[1][1];
                let mut pval = T::zero();
                let mut gp = [T::zero(); 2];
                {
                    let sc = &scr[self.p_idx];
                    for (i, &sd) in sdofs_p.iter().enumerate() {
                        let c = state[off_p + sd];
                        pval += c * sc.ref_tab.vals[q * nb_p + i];
                        let g = sc.grads[q * nb_p + i];
                        gp[0] += c * g[0];
                        gp[1] += c * g[1];
                    }
                }
                // stress field value (4-field)
                let mut s_voigt: Sym2<T> = [T::zero(); 3];
                if let (Some(si), Some(sd_s), Some(offs)) = (self.stress_idx, sdofs_s, off_s) {
                    let sc = &scr[si];
                    for (i, &sd) in sd_s.iter().enumerate() {
                        let phi = sc.ref_tab.vals[q * nb_s + i];
                        for (m, b) in sb.iter().enumerate() {
                            let cv = state[offs + sd * ncs + m];
                            s_voigt[0] += cv * phi * b[0];
                            s_voigt[1] += cv * phi * b[1];
                            s_voigt[2] += cv * phi * b[2];
                        }
                    }
                }

                // constitutive evaluation
                let (s_eff, stress_eval, g_eval) = if four_field {
                    let ge = self.model.eval_g(&s_voigt, &dv, th);
                    (s_voigt, None, Some(ge))
                } else {
                    let se = self.model.eval_stress(&dv, th);
                    (se.s, Some(se), None)
                };
                let (kap, dkap) = self.kappa.eval(th);
                let f_u = self.momentum_source.as_ref().map(|f| f(pq.x, pq.y));
                let f_t = self.energy_source.as_ref().map(|f| f(pq.x, pq.y));

                let sc_t = &scr[self.theta_idx];
                let sc_u = &scr[self.u_idx];
                let sc_p = &scr[self.p_idx];

                // ---- stress rows (4-field) ----
                if let Some(ge) = &g_eval {
                    let si = self.stress_idx.unwrap();
                    let sc_s = &scr[si];
                    // contractions of the test tensors against G and its
                    // derivative images
                    let mut g_b = [T::zero(); 3];
                    let mut dgds_bb = [[T::zero(); 3]; 3];
                    let mut dgdth_b = [T::zero(); 3];
                    for (m, b) in sb.iter().enumerate() {
                        g_b[m] = contract(b, &ge.g);
                        dgdth_b[m] = contract(b, &ge.dg_dtheta);
                        for (m2, b2) in sb.iter().enumerate() {
                            dgds_bb[m][m2] = contract(b, &matvec3(&ge.dg_ds, b2));
                        }
                    }
                    for (i, _sd) in sdofs_s.unwrap().iter().enumerate() {
                        let phi_i = sc_s.ref_tab.vals[q * nb_s + i];
                        for m in 0..ncs {
                            let row = s_lo.unwrap() + i * ncs + m;
                            floc[row] += w * phi_i * g_b[m];
                            if want_jac {
                                for j in 0..nb_s {
                                    let phi_j = sc_s.ref_tab.vals[q * nb_s + j];
                                    for m2 in 0..ncs {
                                        jloc[row * nloc + s_lo.unwrap() + j * ncs + m2] +=
                                            w * phi_i * phi_j * dgds_bb[m][m2];
                                    }
                                }
                                for j in 0..nb_t {
                                    let phj = sc_t.ref_tab.vals[q * nb_t + j];
                                    jloc[row * nloc + t_lo + j] += w * phi_i * phj * dgdth_b[m];
                                }
                                for j in 0..nb_u {
                                    let gj = sc_u.grads[q * nb_u + j];
                                    for e in 0..2 {
                                        let dj = strain_basis(gj, e);
                                        let v = contract(&sb[m], &matvec3(&ge.dg_dd, &dj));
                                        jloc[row * nloc + u_lo + j * 2 + e] += w * phi_i * v;
                                    }
                                }
                            }
                        }
                    }
                }

                // dissipation scalar S : D(u)
                let sdotd = contract(&s_eff, &dv);

                // ---- temperature rows ----
                for i in 0..nb_t {
                    let eta = sc_t.ref_tab.vals[q * nb_t + i];
                    let geta = sc_t.grads[q * nb_t + i];
                    let row = t_lo + i;
                    // diffusion
                    floc[row] += w * co.diff_t * kap * (gth[0] * geta[0] + gth[1] * geta[1]);
                    // convection
                    let u_geta = u[0] * geta[0] + u[1] * geta[1];
                    if self.standard_convection {
                        floc[row] -= w * co.conv_t * th * u_geta;
                    } else {
                        let u_gth = u[0] * gth[0] + u[1] * gth[1];
                        floc[row] += w * co.conv_t * half * (u_gth * eta - u_geta * th);
                    }
                    // adiabatic heating
                    floc[row] += w * co.adiab * (th + co.theta_shift) * u[1] * eta;
                    // dissipation (right-hand side)
                    floc[row] -= w * co.diss * sdotd * eta;
                    if let Some(ft) = f_t {
                        floc[row] -= w * ft * eta;
                    }
                    if want_jac {
                        for j in 0..nb_t {
                            let phj = sc_t.ref_tab.vals[q * nb_t + j];
                            let gphj = sc_t.grads[q * nb_t + j];
                            let mut v = co.diff_t
                                * (dkap * phj * (gth[0] * geta[0] + gth[1] * geta[1])
                                    + kap * (gphj[0] * geta[0] + gphj[1] * geta[1]));
                            if self.standard_convection {
                                v -= co.conv_t * phj * u_geta;
                            } else {
                                let u_gphj = u[0] * gphj[0] + u[1] * gphj[1];
                                v += co.conv_t * half * (u_gphj * eta - u_geta * phj);
                            }
                            v += co.adiab * phj * u[1] * eta;
                            if let Some(se) = &stress_eval {
                                v -= co.diss * contract(&se.ds_dtheta, &dv) * phj * eta;
                            }
                            jloc[row * nloc + t_lo + j] += w * v;
                        }
                        for j in 0..nb_u {
                            let phj = sc_u.ref_tab.vals[q * nb_u + j];
                            let gj = sc_u.grads[q * nb_u + j];
                            for e in 0..2 {
                                let mut v;
                                if self.standard_convection {
                                    v = -co.conv_t * th * phj * geta[e];
                                } else {
                                    v = co.conv_t
                                        * half
                                        * (phj * gth[e] * eta - phj * geta[e] * th);
                                }
                                if e == 1 {
                                    v += co.adiab * (th + co.theta_shift) * phj * eta;
                                }
                                let dj = strain_basis(gj, e);
                                // dissipation: S-part and model derivative
                                v -= co.diss * contract(&s_eff, &dj) * eta;
                                if let Some(se) = &stress_eval {
                                    v -= co.diss * contract(&matvec3(&se.ds_dd, &dj), &dv) * eta;
                                }
                                jloc[row * nloc + u_lo + j * 2 + e] += w * v;
                            }
                        }
                        if let Some(ge) = &g_eval {
                            let _ = ge;
                            let si = self.stress_idx.unwrap();
                            let sc_s = &scr[si];
                            for j in 0..nb_s {
                                let phj = sc_s.ref_tab.vals[q * nb_s + j];
                                for (m, b) in sb.iter().enumerate() {
                                    let v = -co.diss * contract(b, &dv) * phj * eta;
                                    jloc[row * nloc + s_lo.unwrap() + j * ncs + m] += w * v;
                                }
                            }
                        }
                    }
                }

                // ---- velocity rows ----
                for i in 0..nb_u {
                    let phi = sc_u.ref_tab.vals[q * nb_u + i];
                    let gi = sc_u.grads[q * nb_u + i];
                    let u_gi = u[0] * gi[0] + u[1] * gi[1];
                    for c in 0..2 {
                        let row = u_lo + i * 2 + c;
                        let di = strain_basis(gi, c);
                        // stress term
                        floc[row] += w * co.visc * contract(&s_eff, &di);
                        // convection
                        if self.standard_convection {
                            floc[row] -= w * co.conv_u * u[c] * u_gi;
                        } else {
                            let u_guc = u[0] * gu[c][0] + u[1] * gu[c][1];
                            floc[row] += w * co.conv_u * half * (u_guc * phi - u_gi * u[c]);
                        }
                        // pressure gradient block
                        floc[row] -= w * pval * gi[c];
                        // buoyancy against e2
                        if c == 1 {
                            floc[row] -= w * co.buoy * th * phi;
                        }
                        if let Some(fu) = f_u {
                            floc[row] -= w * fu[c] * phi;
                        }
                        if want_jac {
                            for j in 0..nb_u {
                                let phj = sc_u.ref_tab.vals[q * nb_u + j];
                                let gj = sc_u.grads[q * nb_u + j];
                                let u_gj = u[0] * gj[0] + u[1] * gj[1];
                                for e in 0..2 {
                                    let dj = strain_basis(gj, e);
                                    let mut v = T::zero();
                                    if let Some(se) = &stress_eval {
                                        v += co.visc * contract(&matvec3(&se.ds_dd, &dj), &di);
                                    }
                                    if self.standard_convection {
                                        let mut conv = u[c] * phj * gi[e];
                                        if c == e {
                                            conv += phj * u_gi;
                                        }
                                        v -= co.conv_u * conv;
                                    } else {
                                        let mut t1 = phj * gu[c][e] * phi;
                                        if c == e {
                                            t1 += u_gj * phi;
                                        }
                                        let mut t2 = phj * gi[e] * u[c];
                                        if c == e {
                                            t2 += u_gi * phj;
                                        }
                                        v += co.conv_u * half * (t1 - t2);
                                    }
                                    jloc[row * nloc + u_lo + j * 2 + e] += w * v;
                                }
                            }
                            for j in 0..nb_t {
                                let phj = sc_t.ref_tab.vals[q * nb_t + j];
                                let mut v = T::zero();
                                if let Some(se) = &stress_eval {
                                    v += co.visc * contract(&se.ds_dtheta, &di) * phj;
                                }
                                if c == 1 {
                                    v -= co.buoy * phj * phi;
                                }
                                jloc[row * nloc + t_lo + j] += w * v;
                            }
                            for j in 0..nb_p {
                                let phj = sc_p.ref_tab.vals[q * nb_p + j];
                                jloc[row * nloc + p_lo + j] -= w * phj * gi[c];
                            }
                            if four_field {
                                let si = self.stress_idx.unwrap();
                                let sc_s = &scr[si];
                                for j in 0..nb_s {
                                    let phj = sc_s.ref_tab.vals[q * nb_s + j];
                                    for (m, b) in sb.iter().enumerate() {
                                        jloc[row * nloc + s_lo.unwrap() + j * ncs + m] +=
                                            w * co.visc * contract(b, &di) * phj;
                                    }
                                }
                            }
                        }
                    }
                }

                // ---- pressure rows ----
                let p1p1 = self.stab.pressure_p1p1;
                let h2 = geo.h * geo.h;
                // momentum residual proxy div(u x u) + grad p for the
                // stabilization term
                let mut rstab = [T::zero(); 2];
                if p1p1 {
                    for c in 0..2 {
                        rstab[c] =
                            u[0] * gu[c][0] + u[1] * gu[c][1] + divu * u[c] + gp[c];
                    }
                }
                for i in 0..nb_p {
                    let psi = sc_p.ref_tab.vals[q * nb_p + i];
                    let gpsi = sc_p.grads[q * nb_p + i];
                    let row = p_lo + i;
                    floc[row] -= w * divu * psi;
                    if p1p1 {
                        floc[row] -=
                            w * two * h2 * (rstab[0] * gpsi[0] + rstab[1] * gpsi[1]);
                    }
                    if want_jac {
                        for j in 0..nb_u {
                            let phj = sc_u.ref_tab.vals[q * nb_u + j];
                            let gj = sc_u.grads[q * nb_u + j];
                            for e in 0..2 {
                                let mut v = -gj[e] * psi;
                                if p1p1 {
                                    // derivative of div(u x u) in direction
                                    // phi_j e_e, contracted with grad psi
                                    let u_gj = u[0] * gj[0] + u[1] * gj[1];
                                    let mut acc = T::zero();
                                    for c2 in 0..2 {
                                        let mut dr = phj * gu[c2][e];
                                        if c2 == e {
                                            dr += u_gj + divu * phj;
                                        }
                                        dr += gj[e] * u[c2];
                                        acc += dr * gpsi[c2];
                                    }
                                    v -= two * h2 * acc;
                                }
                                jloc[row * nloc + u_lo + j * 2 + e] += w * v;
                            }
                        }
                        if p1p1 {
                            for j in 0..nb_p {
                                let gj = sc_p.grads[q * nb_p + j];
                                jloc[row * nloc + p_lo + j] -=
                                    w * two * h2 * (gj[0] * gpsi[0] + gj[1] * gpsi[1]);
                            }
                        }
                    }
                }
            }

            // scatter
            for (il, &gr) in gdofs.iter().enumerate() {
                residual[gr] += floc[il];
            }
            if let Some(j) = jac.as_mut() {
                for (il, &gr) in gdofs.iter().enumerate() {
                    for (jl, &gc) in gdofs.iter().enumerate() {
                        let v = jloc[il * nloc + jl];
                        if v != T::zero() {
                            j.add(gr, gc, v);
                        }
                    }
                }
            }
        }

        if self.stab.velocity_ip.is_some() || self.stab.temperature_ip.is_some() {
            self.assemble_ip_facets(state, &mut residual, jac.as_mut());
        }

        // Dirichlet rows of the residual hold (value - boundary data)
        for &(d, v) in &self.dirichlet {
            residual[d] = state[d] - v;
        }
        (residual, jac)
    }

    /// Cellwise max of |u| over the velocity nodes, with the maximizing
    /// scalar-node position and direction for the coefficient derivative.
    fn cell_velocity_max(&self, state: &[T], cell: usize) -> (T, usize, [T; 2]) {
        let uf = &self.layout.fields[self.u_idx];
        let mut best = T::zero();
        let mut arg = 0usize;
        let mut dir = [T::zero(); 2];
        for (i, &sd) in uf.space.cell_scalar_dofs(cell).iter().enumerate() {
            let ux = state[uf.offset + sd * 2];
            let uy = state[uf.offset + sd * 2 + 1];
            let nrm = (ux * ux + uy * uy).sqrt();
            if nrm > best {
                best = nrm;
                arg = i;
                dir = if nrm > T::of(1e-14) {
                    [ux / nrm, uy / nrm]
                } else {
                    [T::zero(); 2]
                };
            }
        }
        (best, arg, dir)
    }

    fn assemble_ip_facets(
        &self,
        state: &[T],
        residual: &mut [T],
        mut jac: Option<&mut CsrMatrix<T>>,
    ) {
        let uf = &self.layout.fields[self.u_idx];
        let tf = &self.layout.fields[self.theta_idx];
        let k = self.config.velocity_degree();
        let fr = FacetRules::<T>::new(2 * k);
        let half = T::of(0.5);
        let signs = [T::one(), -T::one()];

        for (fi, facet) in self.mesh.interior_facets.iter().enumerate() {
            // coefficient: c_F = (delta_K1 + delta_K2)/2 with
            // delta_K = cip * max|u| over the cell nodes
            let m0 = self.cell_velocity_max(state, facet.cells[0]);
            let m1 = self.cell_velocity_max(state, facet.cells[1]);
            let tabs = fr.context(&self.mesh, &uf.space, &tf.space, fi, facet);
            let h2 = tabs.h * tabs.h;
            let nb_u = tabs.test[0].nb;
            let nb_t = tabs.trial[0].nb;
            let nq = tabs.qweights.len();

            let u_dofs: [Vec<usize>; 2] = [
                uf.space
                    .cell_full_dofs(facet.cells[0])
                    .into_iter()
                    .map(|d| d + uf.offset)
                    .collect(),
                uf.space
                    .cell_full_dofs(facet.cells[1])
                    .into_iter()
                    .map(|d| d + uf.offset)
                    .collect(),
            ];
            let t_dofs: [Vec<usize>; 2] = [
                tf.space
                    .cell_scalar_dofs(facet.cells[0])
                    .iter()
                    .map(|&d| d + tf.offset)
                    .collect(),
                tf.space
                    .cell_scalar_dofs(facet.cells[1])
                    .iter()
                    .map(|&d| d + tf.offset)
                    .collect(),
            ];

            // velocity gradient jumps at quadrature points
            let mut jump_u = vec![[[T::zero(); 2]; 2]; nq]; // [q][c][a]
            let mut jump_t = vec![[T::zero(); 2]; nq];
            for q in 0..nq {
                for side in 0..2 {
                    let tab = &tabs.test[side];
                    for (i, &d) in u_dofs[side].iter().enumerate() {
                        let scalar_i = i / 2;
                        let c = i % 2;
                        let g = tab.grads[q * nb_u + scalar_i];
                        let cv = state[d];
                        jump_u[q][c][0] += signs[side] * cv * g[0];
                        jump_u[q][c][1] += signs[side] * cv * g[1];
                    }
                    let tabt = &tabs.trial[side];
                    for (i, &d) in t_dofs[side].iter().enumerate() {
                        let g = tabt.grads[q * nb_t + i];
                        let cv = state[d];
                        jump_t[q][0] += signs[side] * cv * g[0];
                        jump_t[q][1] += signs[side] * cv * g[1];
                    }
                }
            }

            // velocity penalty
            if let Some(cip) = self.stab.velocity_ip {
                let c_f = cip * half * (m0.0 + m1.0);
                // residual integrals per test dof, without the coefficient
                let mut res_i = vec![T::zero(); 2 * (2 * nb_u)];
                for q in 0..nq {
                    let w = tabs.qweights[q] * h2;
                    for side in 0..2 {
                        let tab = &tabs.test[side];
                        for i in 0..nb_u {
                            let g = tab.grads[q * nb_u + i];
                            for c in 0..2 {
                                res_i[side * 2 * nb_u + i * 2 + c] += w
                                    * signs[side]
                                    * (jump_u[q][c][0] * g[0] + jump_u[q][c][1] * g[1]);
                            }
                        }
                    }
                }
                for side in 0..2 {
                    for (i, &d) in u_dofs[side].iter().enumerate() {
                        residual[d] += c_f * res_i[side * 2 * nb_u + i];
                    }
                }
                if let Some(j) = jac.as_deref_mut() {
                    // main jump-jump block
                    for q in 0..nq {
                        let w = tabs.qweights[q] * h2 * c_f;
                        for sr in 0..2 {
                            let tr = &tabs.test[sr];
                            for i in 0..nb_u {
                                let gi = tr.grads[q * nb_u + i];
                                for sc in 0..2 {
                                    let tc = &tabs.test[sc];
                                    for jj in 0..nb_u {
                                        let gj = tc.grads[q * nb_u + jj];
                                        let v = w
                                            * signs[sr]
                                            * signs[sc]
                                            * (gi[0] * gj[0] + gi[1] * gj[1]);
                                        if v != T::zero() {
                                            for c in 0..2 {
                                                j.add(
                                                    u_dofs[sr][i * 2 + c],
                                                    u_dofs[sc][jj * 2 + c],
                                                    v,
                                                );
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                    // coefficient derivative through the cellwise max
                    for (side_m, m) in [(0usize, &m0), (1usize, &m1)] {
                        if m.0 <= T::of(1e-14) {
                            continue;
                        }
                        let dcol = &u_dofs[side_m];
                        for sr in 0..2 {
                            for (i, &dr) in u_dofs[sr].iter().enumerate() {
                                let ri = res_i[sr * 2 * nb_u + i];
                                if ri == T::zero() {
                                    continue;
                                }
                                for e in 0..2 {
                                    let dc = dcol[m.1 * 2 + e];
                                    let v = cip * half * m.2[e] * ri;
                                    j.add(dr, dc, v);
                                }
                            }
                        }
                    }
                }
            }

            // temperature penalty, same coefficient rule
            if let Some(cip) = self.stab.temperature_ip {
                let c_f = cip * half * (m0.0 + m1.0);
                let mut res_i = vec![T::zero(); 2 * nb_t];
                for q in 0..nq {
                    let w = tabs.qweights[q] * h2;
                    for side in 0..2 {
                        let tab = &tabs.trial[side];
                        for i in 0..nb_t {
                            let g = tab.grads[q * nb_t + i];
                            res_i[side * nb_t + i] +=
                                w * signs[side] * (jump_t[q][0] * g[0] + jump_t[q][1] * g[1]);
                        }
                    }
                }
                for side in 0..2 {
                    for (i, &d) in t_dofs[side].iter().enumerate() {
                        residual[d] += c_f * res_i[side * nb_t + i];
                    }
                }
                if let Some(j) = jac.as_deref_mut() {
                    for q in 0..nq {
                        let w = tabs.qweights[q] * h2 * c_f;
                        for sr in 0..2 {
                            let tr = &tabs.trial[sr];
                            for i in 0..nb_t {
                                let gi = tr.grads[q * nb_t + i];
                                for sc in 0..2 {
                                    let tc = &tabs.trial[sc];
                                    for jj in 0..nb_t {
                                        let gj = tc.grads[q * nb_t + jj];
                                        let v = w
                                            * signs[sr]
                                            * signs[sc]
                                            * (gi[0] * gj[0] + gi[1] * gj[1]);
                                        if v != T::zero() {
                                            j.add(t_dofs[sr][i], t_dofs[sc][jj], v);
                                        }
                                    }
                                }
                            }
                        }
                    }
                    for (side_m, m) in [(0usize, &m0), (1usize, &m1)] {
                        if m.0 <= T::of(1e-14) {
                            continue;
                        }
                        let dcol = &u_dofs[side_m];
                        for sr in 0..2 {
                            for (i, &dr) in t_dofs[sr].iter().enumerate() {
                                let ri = res_i[sr * nb_t + i];
                                if ri == T::zero() {
                                    continue;
                                }
                                for e in 0..2 {
                                    let dc = dcol[m.1 * 2 + e];
                                    j.add(dr, dc, cip * half * m.2[e] * ri);
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    /// Jump energy sum_F h^2 int |[grad u]|^2 with unit coefficient; the
    /// interior-penalty term vanishes on globally C^1 discrete fields.
    pub fn ip_jump_energy(&self, state: &[T]) -> T {
        let uf = &self.layout.fields[self.u_idx];
        let tf = &self.layout.fields[self.theta_idx];
        let k = self.config.velocity_degree();
        let fr = FacetRules::<T>::new(2 * k);
        let signs = [T::one(), -T::one()];
        let mut energy = T::zero();
        for (fi, facet) in self.mesh.interior_facets.iter().enumerate() {
            let tabs = fr.context(&self.mesh, &uf.space, &tf.space, fi, facet);
            let nb_u = tabs.test[0].nb;
            let h2 = tabs.h * tabs.h;
            let u_dofs: [Vec<usize>; 2] = [
                uf.space
                    .cell_full_dofs(facet.cells[0])
                    .into_iter()
                    .map(|d| d + uf.offset)
                    .collect(),
                uf.space
                    .cell_full_dofs(facet.cells[1])
                    .into_iter()
                    .map(|d| d + uf.offset)
                    .collect(),
            ];
            for q in 0..tabs.qweights.len() {
                let mut jump = [[T::zero(); 2]; 2];
                for side in 0..2 {
                    let tab = &tabs.test[side];
                    for (i, &d) in u_dofs[side].iter().enumerate() {
                        let scalar_i = i / 2;
                        let c = i % 2;
                        let g = tab.grads[q * nb_u + scalar_i];
                        jump[c][0] += signs[side] * state[d] * g[0];
                        jump[c][1] += signs[side] * state[d] * g[1];
                    }
                }
                let mut m2 = T::zero();
                for c in 0..2 {
                    for a in 0..2 {
                        m2 += jump[c][a] * jump[c][a];
                    }
                }
                energy += tabs.qweights[q] * h2 * m2;
            }
        }
        energy
    }
}

/// Assemble the skew convective residual B(v, v, phi_i) over all velocity
/// test functions and contract with v itself: the skew form guarantees
/// B(v,v,v) = 0 for any discrete v. Returns (value, positive scale).
pub fn skew_convection_energy<T: Real>(space: &FunctionSpace<T>, coeffs: &[T]) -> (T, T) {
    let rule = quadrature_rule::<T>((3 * space.elem.degree + 1).min(20)).unwrap();
    let tab = space.basis.tabulate(&rule.points);
    let nb = tab.nb;
    let mut res = vec![T::zero(); space.ndof()];
    let half = T::of(0.5);
    for cell in 0..space.mesh.cells.len() {
        let geo = CellGeometry::new(&space.mesh, cell);
        let phys = physical_tabulation(&tab, &geo);
        let dofs = space.cell_scalar_dofs(cell);
        for q in 0..rule.points.len() {
            let w = rule.weights[q] * geo.det_j.abs();
            let mut u = [T::zero(); 2];
            let mut gu = [[T::zero(); 2]; 2];
            for (i, &sd) in dofs.iter().enumerate() {
                let phi = phys.vals[q * nb + i];
                let g = phys.grads[q * nb + i];
                for c in 0..2 {
                    let cv = coeffs[sd * 2 + c];
                    u[c] += cv * phi;
                    gu[c][0] += cv * g[0];
                    gu[c][1] += cv * g[1];
                }
            }
            for (i, &sd) in dofs.iter().enumerate() {
                let phi = phys.vals[q * nb + i];
                let gi = phys.grads[q * nb + i];
                let u_gi = u[0] * gi[0] + u[1] * gi[1];
                for c in 0..2 {
                    let u_guc = u[0] * gu[c][0] + u[1] * gu[c][1];
                    res[sd * 2 + c] += w * half * (u_guc * phi - u_gi * u[c]);
                }
            }
        }
    }
    let mut value = T::zero();
    let mut scale = T::zero();
    for (r, v) in res.iter().zip(coeffs) {
        value += *r * *v;
        scale += (*r * *v).abs();
    }
    (value, scale)
}

/// Assemble the skew temperature convection residual C(u, theta, eta_i) and
/// contract with theta: C(u, eta, eta) = 0 for any u.
pub fn skew_temperature_energy<T: Real>(
    uspace: &FunctionSpace<T>,
    ucoeffs: &[T],
    tspace: &FunctionSpace<T>,
    tcoeffs: &[T],
) -> (T, T) {
    let deg = uspace.elem.degree + 2 * tspace.elem.degree;
    let rule = quadrature_rule::<T>(deg.clamp(2, 20)).unwrap();
    let utab = uspace.basis.tabulate(&rule.points);
    let ttab = tspace.basis.tabulate(&rule.points);
    let (nbu, nbt) = (utab.nb, ttab.nb);
    let mut res = vec![T::zero(); tspace.ndof()];
    let half = T::of(0.5);
    for cell in 0..uspace.mesh.cells.len() {
        let geo = CellGeometry::new(&uspace.mesh, cell);
        let up = physical_tabulation(&utab, &geo);
        let tp = physical_tabulation(&ttab, &geo);
        let udofs = uspace.cell_scalar_dofs(cell);
        let tdofs = tspace.cell_scalar_dofs(cell);
        for q in 0..rule.points.len() {
            let w = rule.weights[q] * geo.det_j.abs();
            let mut u = [T::zero(); 2];
            for (i, &sd) in udofs.iter().enumerate() {
                let phi = up.vals[q * nbu + i];
                u[0] += ucoeffs[sd * 2] * phi;
                u[1] += ucoeffs[sd * 2 + 1] * phi;
            }
            let mut th = T::zero();
            let mut gth = [T::zero(); 2];
            for (i, &sd) in tdofs.iter().enumerate() {
                th += tcoeffs[sd] * tp.vals[q * nbt + i];
                let g = tp.grads[q * nbt + i];
                gth[0] += tcoeffs[sd] * g[0];
                gth[1] += tcoeffs[sd] * g[1];
            }
            let u_gth = u[0] * gth[0] + u[1] * gth[1];
            for (i, &sd) in tdofs.iter().enumerate() {
                let eta = tp.vals[q * nbt + i];
                let geta = tp.grads[q * nbt + i];
                let u_geta = u[0] * geta[0] + u[1] * geta[1];
                res[sd] += w * half * (u_gth * eta - u_geta * th);
            }
        }
    }
    let mut value = T::zero();
    let mut scale = T::zero();
    for (r, v) in res.iter().zip(tcoeffs) {
        value += *r * *v;
        scale += (*r * *v).abs();
    }
    (value, scale)
}
