//! Smooth compactly supported kernels and discrete convolution on the lattice.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fft::FftNd;
use crate::fields::{shift_difference_norm, DiscreteField, Lattice};
use crate::par;
use crate::rate::{fit_power_law, RateFit};

/// Minimum kernel radius in lattice spacings.
pub const MIN_CELLS_PER_RADIUS: f64 = 4.0;

/// `exp(-1 / (1 - r^2))` for `r < 1`, zero otherwise.
pub fn bump_profile(r2: f64) -> f64 {
    if r2 >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r2)).exp()
    }
}

/// Axes the kernel averages over.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelAxes {
    /// Isotropic ball in space-time.
    #[default]
    SpaceTime,
    /// Ball in space only; time slices are filtered independently.
    SpaceOnly,
}

/// Convolution algorithm. Both compute the same discrete sum; the stencil
/// loop is the reference.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    Direct,
    Fft,
    /// Direct for small stencil work, FFT otherwise.
    #[default]
    Auto,
}

/// Work (stencil entries times nodes) above which `Auto` switches to FFT.
pub const AUTO_DIRECT_LIMIT: f64 = 4e7;

/// Discrete mollifier: bump weights on the lattice nodes within distance
/// `epsilon` of the origin, renormalized to sum to one.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MollifierKernel {
    pub epsilon: f64,
    pub axes: KernelAxes,
    /// Stencil radius in cells per axis (time first).
    pub radii: Vec<usize>,
    pub spacing: Vec<f64>,
    /// Dense weights over the box `prod (2 r_a + 1)`, row-major, time first.
    pub profile_samples: Vec<f64>,
    /// Sum of the weights after renormalization.
    pub discrete_sum: f64,
}

impl MollifierKernel {
    pub fn new(epsilon: f64, lattice: &Lattice, axes: KernelAxes) -> Result<Self> {
        lattice.validate()?;
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(LabError::Parameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        let h_max = match axes {
            KernelAxes::SpaceTime => lattice.h_time().max(lattice.h_space()),
            KernelAxes::SpaceOnly => lattice.h_space(),
        };
        let eps_min = MIN_CELLS_PER_RADIUS * h_max;
        if epsilon < eps_min * (1.0 - 1e-12) {
            return Err(LabError::Resolution(format!(
                "epsilon = {epsilon} is under-resolved; minimum is {eps_min} ({MIN_CELLS_PER_RADIUS} cells per radius)"
            )));
        }
        let spacing: Vec<f64> = (0..lattice.axes()).map(|a| lattice.spacing(a)).collect();
        let radii: Vec<usize> = spacing
            .iter()
            .enumerate()
            .map(|(a, h)| {
                if a == 0 && axes == KernelAxes::SpaceOnly {
                    0
                } else {
                    (epsilon / h * (1.0 + 1e-12)).floor() as usize
                }
            })
            .collect();
        let widths: Vec<usize> = radii.iter().map(|r| 2 * r + 1).collect();
        let size: usize = widths.iter().product();
        let mut samples = vec![0.0; size];
        let mut idx = vec![0usize; radii.len()];
        for (flat, w) in samples.iter_mut().enumerate() {
            unflatten(flat, &widths, &mut idx);
            let r2: f64 = idx
                .iter()
                .zip(&radii)
                .zip(&spacing)
                .map(|((i, r), h)| {
                    let x = (*i as f64 - *r as f64) * h / epsilon;
                    x * x
                })
                .sum();
            *w = bump_profile(r2);
        }
        let total: f64 = samples.iter().sum();
        samples.iter_mut().for_each(|w| *w /= total);
        let discrete_sum = samples.iter().sum();
        Ok(MollifierKernel {
            epsilon,
            axes,
            radii,
            spacing,
            profile_samples: samples,
            discrete_sum,
        })
    }

    pub fn widths(&self) -> Vec<usize> {
        self.radii.iter().map(|r| 2 * r + 1).collect()
    }

    /// Non-zero weights with their signed cell offsets.
    pub fn entries(&self) -> Vec<(Vec<isize>, f64)> {
        let widths = self.widths();
        let mut idx = vec![0usize; widths.len()];
        let mut out = Vec::new();
        for (flat, w) in self.profile_samples.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            unflatten(flat, &widths, &mut idx);
            let off = idx
                .iter()
                .zip(&self.radii)
                .map(|(i, r)| *i as isize - *r as isize)
                .collect();
            out.push((off, *w));
        }
        out
    }

    /// Same cell spacings as `lattice`.
    fn check_lattice(&self, lattice: &Lattice) -> Result<()> {
        let same = self.spacing.len() == lattice.axes()
            && self
                .spacing
                .iter()
                .enumerate()
                .all(|(a, h)| (h - lattice.spacing(a)).abs() <= 1e-12 * h);
        if !same {
            return Err(LabError::Parameter(
                "kernel was built for a lattice with different spacings".into(),
            ));
        }
        Ok(())
    }

    /// CSV rows `offset_0, .., offset_k, weight` for the non-zero weights.
    pub fn write_csv(&self, w: impl std::io::Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (0..self.radii.len())
            .map(|a| format!("offset{a}"))
            .collect();
        header.push("weight".into());
        out.write_record(&header)?;
        for (off, wt) in self.entries() {
            let mut row: Vec<String> = off.iter().map(|o| o.to_string()).collect();
            row.push(wt.to_string());
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn unflatten(mut flat: usize, widths: &[usize], out: &mut [usize]) {
    for a in (0..widths.len()).rev() {
        out[a] = flat % widths[a];
        flat /= widths[a];
    }
}

/// Space-time mollifier `exp(-1/(1-|X/eps|^2))`.
pub fn make_kernel(epsilon: f64, lattice: &Lattice) -> Result<MollifierKernel> {
    MollifierKernel::new(epsilon, lattice, KernelAxes::SpaceTime)
}

/// Lattice of the mollified field: unchanged when time is periodic, otherwise
/// trimmed by the temporal kernel radius at both ends.
pub fn output_lattice(
    lattice: &Lattice,
    periodic_time: bool,
    kernel: &MollifierKernel,
) -> Result<Lattice> {
    let rt = kernel.radii[0];
    if periodic_time || rt == 0 {
        return Ok(lattice.clone());
    }
    let n_time = lattice
        .n_time
        .checked_sub(2 * rt)
        .filter(|n| *n >= crate::fields::MIN_AXIS_COUNT);
    let Some(n_time) = n_time else {
        return Err(LabError::Resolution(format!(
            "trimming {rt} time cells at each end leaves fewer than {} of {}",
            crate::fields::MIN_AXIS_COUNT,
            lattice.n_time
        )));
    };
    let h = lattice.h_time();
    Ok(Lattice {
        n_time,
        extent_time: n_time as f64 * h,
        origin_time: lattice.origin_time + rt as f64 * h,
        ..lattice.clone()
    })
}

pub(crate) fn choose(backend: Backend, kernel: &MollifierKernel, lattice: &Lattice) -> Backend {
    match backend {
        Backend::Auto => {
            let nz = kernel.profile_samples.iter().filter(|w| **w != 0.0).count();
            if nz as f64 * lattice.n_nodes() as f64 <= AUTO_DIRECT_LIMIT {
                Backend::Direct
            } else {
                Backend::Fft
            }
        }
        b => b,
    }
}

/// Stencil convolution of scalar planes (one value per node).
pub fn convolve_direct(
    lattice: &Lattice,
    periodic_time: bool,
    planes: &[&[f64]],
    kernel: &MollifierKernel,
) -> Result<Vec<Vec<f64>>> {
    kernel.check_lattice(lattice)?;
    let out_l = output_lattice(lattice, periodic_time, kernel)?;
    let rt = if periodic_time { 0 } else { kernel.radii[0] };
    let axes = lattice.axes();
    // Wrap offsets once; periodic axes narrower than the stencil alias onto
    // the same node, so merge duplicates.
    let mut merged: std::collections::BTreeMap<Vec<isize>, f64> = Default::default();
    for (off, w) in kernel.entries() {
        let key: Vec<isize> = off
            .iter()
            .enumerate()
            .map(|(a, o)| {
                if a == 0 && !periodic_time {
                    *o
                } else {
                    o.rem_euclid(lattice.count(a) as isize)
                }
            })
            .collect();
        *merged.entry(key).or_insert(0.0) += w;
    }
    let entries: Vec<(Vec<isize>, f64)> = merged.into_iter().collect();
    let n_out = out_l.n_nodes();
    let outs = planes
        .iter()
        .map(|plane| {
            let mut out = vec![0.0; n_out];
            out.par_chunks_mut(1024).enumerate().for_each(|(c, chunk)| {
                let mut idx = vec![0usize; axes];
                for (j, o) in chunk.iter_mut().enumerate() {
                    out_l.multi_index(c * 1024 + j, &mut idx);
                    idx[0] += rt;
                    let mut s = 0.0;
                    for (off, w) in &entries {
                        let mut src = 0usize;
                        for a in 0..axes {
                            let cnt = lattice.count(a) as isize;
                            // Convolution: f(X - Y).
                            let mut i = idx[a] as isize - off[a];
                            if a > 0 || periodic_time {
                                i = i.rem_euclid(cnt);
                            }
                            src += i as usize * lattice.stride(a);
                        }
                        s += w * plane[src];
                    }
                    *o = s;
                }
            });
            out
        })
        .collect();
    Ok(outs)
}

/// Spectra of real planes, packed two per complex array, reused across
/// kernels.
pub struct SpectralPlanes {
    lattice: Lattice,
    periodic_time: bool,
    fft: FftNd,
    n_planes: usize,
    packed: Vec<Vec<Complex64>>,
}

impl SpectralPlanes {
    pub fn new(lattice: &Lattice, periodic_time: bool, planes: &[&[f64]]) -> Self {
        let dims: Vec<usize> = (0..lattice.axes()).map(|a| lattice.count(a)).collect();
        let fft = FftNd::new(&dims);
        let packed = planes
            .chunks(2)
            .map(|pair| {
                let mut buf: Vec<Complex64> = match pair {
                    [a, b] => a
                        .par_iter()
                        .zip(b.par_iter())
                        .map(|(x, y)| Complex64::new(*x, *y))
                        .collect(),
                    [a] => a.par_iter().map(|x| Complex64::new(*x, 0.0)).collect(),
                    _ => unreachable!(),
                };
                fft.forward(&mut buf);
                buf
            })
            .collect();
        SpectralPlanes {
            lattice: lattice.clone(),
            periodic_time,
            fft,
            n_planes: planes.len(),
            packed,
        }
    }

    fn kernel_spectrum(&self, kernel: &MollifierKernel) -> Vec<Complex64> {
        let l = &self.lattice;
        let mut k = vec![Complex64::default(); l.n_nodes()];
        for (off, w) in kernel.entries() {
            let mut dst = 0usize;
            for (a, o) in off.iter().enumerate() {
                dst += o.rem_euclid(l.count(a) as isize) as usize * l.stride(a);
            }
            k[dst].re += w;
        }
        self.fft.forward(&mut k);
        k
    }

    /// Convolve every stored plane with `kernel`.
    pub fn convolve(&self, kernel: &MollifierKernel) -> Result<Vec<Vec<f64>>> {
        kernel.check_lattice(&self.lattice)?;
        let out_l = output_lattice(&self.lattice, self.periodic_time, kernel)?;
        let rt = if self.periodic_time {
            0
        } else {
            kernel.radii[0]
        };
        let spec = self.kernel_spectrum(kernel);
        let scale = 1.0 / self.fft.len() as f64;
        let offset = rt * self.lattice.stride(0);
        let n_out = out_l.n_nodes();
        let mut out = Vec::with_capacity(self.n_planes);
        for (p, packed) in self.packed.iter().enumerate() {
            let mut buf: Vec<Complex64> = packed
                .par_iter()
                .zip(spec.par_iter())
                .map(|(a, b)| a * b)
                .collect();
            self.fft.inverse(&mut buf);
            let view = &buf[offset..offset + n_out];
            out.push(view.par_iter().map(|c| c.re * scale).collect());
            if 2 * p + 1 < self.n_planes {
                out.push(view.par_iter().map(|c| c.im * scale).collect());
            }
        }
        Ok(out)
    }
}

/// Split an interleaved field into component planes.
pub fn component_planes(field: &DiscreteField) -> Vec<Vec<f64>> {
    (0..field.n).map(|c| field.component(c)).collect()
}

fn interleave(planes: &[Vec<f64>], n_nodes: usize) -> Vec<f64> {
    let n = planes.len();
    let mut v = vec![0.0; n_nodes * n];
    v.par_chunks_mut(n).enumerate().for_each(|(i, s)| {
        for (c, x) in s.iter_mut().enumerate() {
            *x = planes[c][i];
        }
    });
    v
}

/// Convolve planes with the chosen backend.
pub fn convolve_planes(
    lattice: &Lattice,
    periodic_time: bool,
    planes: &[&[f64]],
    kernel: &MollifierKernel,
    backend: Backend,
) -> Result<Vec<Vec<f64>>> {
    match choose(backend, kernel, lattice) {
        Backend::Fft => {
            kernel.check_lattice(lattice)?;
            SpectralPlanes::new(lattice, periodic_time, planes).convolve(kernel)
        }
        _ => convolve_direct(lattice, periodic_time, planes, kernel),
    }
}

/// `[f]_eps`, componentwise.
pub fn mollify(field: &DiscreteField, kernel: &MollifierKernel) -> Result<DiscreteField> {
    mollify_with(field, kernel, Backend::Auto)
}

pub fn mollify_with(
    field: &DiscreteField,
    kernel: &MollifierKernel,
    backend: Backend,
) -> Result<DiscreteField> {
    let planes = component_planes(field);
    let refs: Vec<&[f64]> = planes.iter().map(|p| p.as_slice()).collect();
    let out = convolve_planes(&field.lattice, field.periodic_time, &refs, kernel, backend)?;
    let lattice = output_lattice(&field.lattice, field.periodic_time, kernel)?;
    let mut result = DiscreteField::new(
        lattice.clone(),
        field.n,
        interleave(&out, lattice.n_nodes()),
        field.periodic_time,
    )?;
    result.system = field.system.clone();
    if lattice.n_time != field.lattice.n_time {
        result.notes.push(format!(
            "time trimmed by {} cells at each end",
            kernel.radii[0]
        ));
    }
    Ok(result)
}

/// Node index in the untrimmed lattice of node `i` of the trimmed one.
pub(crate) fn untrimmed_index(lattice: &Lattice, out: &Lattice, i: usize) -> usize {
    let rt = ((out.origin_time - lattice.origin_time) / lattice.h_time()).round() as usize;
    i + rt * lattice.stride(0)
}

/// Second-order central differences along every axis. Returns planes
/// `d[c * axes + a]`. Non-periodic time uses one-sided differences at the
/// two end slices.
pub fn central_gradient(
    lattice: &Lattice,
    periodic_time: bool,
    planes: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    let axes = lattice.axes();
    let mut out = Vec::with_capacity(planes.len() * axes);
    for plane in planes {
        for a in 0..axes {
            let count = lattice.count(a);
            let stride = lattice.stride(a);
            let h = lattice.spacing(a);
            let periodic = a > 0 || periodic_time;
            let mut d = vec![0.0; plane.len()];
            d.par_chunks_mut(4096).enumerate().for_each(|(c, chunk)| {
                for (j, o) in chunk.iter_mut().enumerate() {
                    let node = c * 4096 + j;
                    let i = (node / stride) % count;
                    let base = node - i * stride;
                    let at = |k: usize| plane[base + k * stride];
                    *o = if periodic {
                        (at((i + 1) % count) - at((i + count - 1) % count)) / (2.0 * h)
                    } else if i == 0 {
                        (at(1) - at(0)) / h
                    } else if i == count - 1 {
                        (at(i) - at(i - 1)) / h
                    } else {
                        (at(i + 1) - at(i - 1)) / (2.0 * h)
                    };
                }
            });
            out.push(d);
        }
    }
    out
}

/// `L^q` norm (`q = inf` allowed) of the pointwise Euclidean norm across planes.
pub fn planes_norm(planes: &[&[f64]], cell_volume: f64, q: f64) -> f64 {
    let len = planes.first().map_or(0, |p| p.len());
    let mag2 = |i: usize| planes.iter().map(|p| p[i] * p[i]).sum::<f64>();
    if q.is_infinite() {
        return par::max(len, |i| mag2(i).sqrt()).max(0.0);
    }
    let s = par::sum(len, |i| {
        let m = mag2(i);
        if m == 0.0 {
            0.0
        } else {
            m.powf(0.5 * q)
        }
    });
    (s * cell_volume).powf(1.0 / q)
}

/// Norms behind the three mollification estimates, per epsilon.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MollifierAudit {
    pub q: f64,
    pub alpha_ref: f64,
    pub epsilons: Vec<f64>,
    /// `||D_X [f]_eps||_q`.
    pub gradient_norms: Vec<f64>,
    /// `||[f]_eps - f||_q`.
    pub error_norms: Vec<f64>,
    /// Max over axes of `||f(. + eps e_a) - f||_q`.
    pub translation_norms: Vec<f64>,
    pub gradient_fit: RateFit,
    pub error_fit: RateFit,
    pub translation_fit: RateFit,
    /// `norm * eps^(-slope)` per epsilon.
    pub gradient_constants: Vec<f64>,
    pub error_constants: Vec<f64>,
}

/// Measure the gradient, approximation and translation norms across a
/// sweep of kernels and fit their power laws in epsilon.
pub fn verify_estimates(
    field: &DiscreteField,
    q: f64,
    epsilons: &[f64],
    alpha_ref: f64,
    axes: KernelAxes,
    backend: Backend,
) -> Result<MollifierAudit> {
    if epsilons.len() < 4 {
        return Err(LabError::Parameter(format!(
            "need at least 4 epsilons, got {}",
            epsilons.len()
        )));
    }
    if !(q >= 1.0) {
        return Err(LabError::Parameter(format!("q must be >= 1, got {q}")));
    }
    if !(alpha_ref > 0.0 && alpha_ref < 1.0) {
        return Err(LabError::Parameter(format!(
            "alpha_ref must lie in (0, 1), got {alpha_ref}"
        )));
    }
    let lattice = &field.lattice;
    let kernels = epsilons
        .iter()
        .map(|e| MollifierKernel::new(*e, lattice, axes))
        .collect::<Result<Vec<_>>>()?;
    let planes = component_planes(field);
    let refs: Vec<&[f64]> = planes.iter().map(|p| p.as_slice()).collect();
    let spectral = kernels
        .iter()
        .any(|k| choose(backend, k, lattice) == Backend::Fft)
        .then(|| SpectralPlanes::new(lattice, field.periodic_time, &refs));
    let mut grad_norms = Vec::new();
    let mut err_norms = Vec::new();
    let mut trans_norms = Vec::new();
    for k in &kernels {
        let out_l = output_lattice(lattice, field.periodic_time, k)?;
        let smooth = match (&spectral, choose(backend, k, lattice)) {
            (Some(s), Backend::Fft) => s.convolve(k)?,
            _ => convolve_direct(lattice, field.periodic_time, &refs, k)?,
        };
        let grad = central_gradient(&out_l, field.periodic_time, &smooth);
        let grefs: Vec<&[f64]> = grad.iter().map(|p| p.as_slice()).collect();
        grad_norms.push(planes_norm(&grefs, out_l.cell_volume(), q));
        let diff: Vec<Vec<f64>> = smooth
            .iter()
            .zip(&planes)
            .map(|(s, f)| {
                s.iter()
                    .enumerate()
                    .map(|(i, v)| v - f[untrimmed_index(lattice, &out_l, i)])
                    .collect()
            })
            .collect();
        let drefs: Vec<&[f64]> = diff.iter().map(|p| p.as_slice()).collect();
        err_norms.push(planes_norm(&drefs, out_l.cell_volume(), q));
        let mut t = 0.0f64;
        for a in 0..lattice.axes() {
            if k.radii[a] == 0 {
                continue;
            }
            let off = (k.epsilon / lattice.spacing(a)).round() as isize;
            t = t.max(shift_difference_norm(field, a, off, q)?);
        }
        trans_norms.push(t);
    }
    let gradient_fit = fit_power_law(epsilons, &grad_norms);
    let error_fit = fit_power_law(epsilons, &err_norms);
    let translation_fit = fit_power_law(epsilons, &trans_norms);
    Ok(MollifierAudit {
        q,
        alpha_ref,
        epsilons: epsilons.to_vec(),
        gradient_constants: gradient_fit.constants(epsilons, &grad_norms),
        error_constants: error_fit.constants(epsilons, &err_norms),
        gradient_norms: grad_norms,
        error_norms: err_norms,
        translation_norms: trans_norms,
        gradient_fit,
        error_fit,
        translation_fit,
    })
}

/// `eps_max * 2^-i` for `i = 0..n_levels`.
pub fn dyadic_epsilons(eps_max: f64, n_levels: usize) -> Vec<f64> {
    (0..n_levels)
        .map(|i| eps_max * 0.5f64.powi(i as i32))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice() -> Lattice {
        Lattice::new(1, 32, 64, 1.0, 1.0).unwrap()
    }

    #[test]
    fn kernel_is_normalized_and_nonnegative() {
        let l = lattice();
        let k = make_kernel(8.0 / 64.0, &l).unwrap();
        assert!((k.discrete_sum - 1.0).abs() <= 1e-15);
        assert!(k.profile_samples.iter().all(|w| *w >= 0.0));
        assert_eq!(k.radii, vec![4, 8]);
        assert!(k.profile_samples.len() <= 17 * 17);
        // Nodes on the radius get zero weight.
        assert!(k.entries().iter().all(|(o, _)| o[1].abs() < 8));
    }

    #[test]
    fn under_resolved_epsilon_names_minimum() {
        let err = make_kernel(0.05, &lattice()).unwrap_err();
        assert!(err.to_string().contains("minimum is 0.125"), "{err}");
        assert!(MollifierKernel::new(0.0625, &lattice(), KernelAxes::SpaceOnly).is_ok());
    }

    #[test]
    fn direct_and_fft_agree() {
        let l = lattice();
        let f = DiscreteField::from_fn(l.clone(), 2, true, |p, o| {
            o[0] = (std::f64::consts::TAU * p[1]).sin() + p[0];
            o[1] = (p[1] * 17.0).cos() * (p[0] * 3.0).sin();
        })
        .unwrap();
        let k = make_kernel(0.2, &l).unwrap();
        let a = mollify_with(&f, &k, Backend::Direct).unwrap();
        let b = mollify_with(&f, &k, Backend::Fft).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-13);
        }
        let mut g = f.clone();
        g.periodic_time = false;
        let a = mollify_with(&g, &k, Backend::Direct).unwrap();
        let b = mollify_with(&g, &k, Backend::Fft).unwrap();
        assert_eq!(a.lattice.n_time, 32 - 2 * 6);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn constants_are_preserved() {
        let l = lattice();
        let f = DiscreteField::from_fn(l.clone(), 1, true, |_, o| o[0] = 2.5).unwrap();
        for b in [Backend::Direct, Backend::Fft] {
            let m = mollify_with(&f, &make_kernel(0.25, &l).unwrap(), b).unwrap();
            assert!(m.values.iter().all(|v| (v - 2.5).abs() < 1e-14));
        }
    }

    #[test]
    fn central_gradient_of_sine() {
        let l = Lattice::new(1, 8, 256, 1.0, 1.0).unwrap();
        let f = DiscreteField::from_fn(l.clone(), 1, true, |p, o| {
            o[0] = (2.0 * std::f64::consts::PI * p[1]).sin()
        })
        .unwrap();
        let g = central_gradient(&l, true, &component_planes(&f));
        let mut p = [0.0; 2];
        for i in 0..l.n_nodes() {
            l.point(i, &mut p);
            let exact = 2.0 * std::f64::consts::PI * (2.0 * std::f64::consts::PI * p[1]).cos();
            assert!((g[1][i] - exact).abs() < 1e-3);
            assert_eq!(g[0][i], 0.0);
        }
    }
}
