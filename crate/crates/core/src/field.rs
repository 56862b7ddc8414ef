//! Grid geometry, sampled fields, norms and disk quadrature.
//!
//! The plane is replaced by the flat torus `[-L, L)^2` sampled on an `n x n`
//! lattice. Sample `(j, m)` sits at `z = (-L + j h) + i (-L + m h)` with
//! `h = 2L / n`, stored row-major at index `j * n + m`. All integrals use the
//! rectangle rule with cell measure `h^2`.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};

const COMPLEX_MAGIC: &[u8; 4] = b"BLF1";
const REAL_MAGIC: &[u8; 4] = b"BLR1";
const HEADER_LEN: usize = 16;

/// Periodic square grid covering `[-half_width, half_width)^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n: usize,
    half_width: f64,
    support_radius: f64,
}

impl GridSpec {
    pub fn new(n: usize, half_width: f64, support_radius: f64) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n = {n} must be a power of two and at least 16"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half_width = {half_width} must be positive"
            )));
        }
        if !(support_radius > 0.0 && support_radius < half_width) {
            return Err(Error::InvalidGrid(format!(
                "support_radius = {support_radius} must lie in (0, {half_width})"
            )));
        }
        Ok(Self {
            n,
            half_width,
            support_radius,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Number of samples, `n^2`.
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Area of one cell.
    pub fn cell_area(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    /// Area of the whole torus, `(2L)^2`.
    pub fn area(&self) -> f64 {
        let w = 2.0 * self.half_width;
        w * w
    }

    /// Lattice coordinate `-L + j h`.
    pub fn coord(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    pub fn point(&self, j: usize, m: usize) -> Complex64 {
        Complex64::new(self.coord(j), self.coord(m))
    }

    /// Lattice point of flat index `idx`.
    pub fn point_at(&self, idx: usize) -> Complex64 {
        self.point(idx / self.n, idx % self.n)
    }

    /// Whether `z` lies in the closed support box `|x|_inf <= support_radius`.
    pub fn in_support(&self, z: Complex64) -> bool {
        z.re.abs() <= self.support_radius && z.im.abs() <= self.support_radius
    }

    /// Flat indices of lattice points inside the support box.
    pub fn support_indices(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.in_support(self.point_at(i)))
            .collect()
    }

    /// Flat indices inside the box `|x|_inf <= fraction * support_radius`.
    pub fn box_indices(&self, fraction: f64) -> Vec<usize> {
        let r = fraction * self.support_radius;
        (0..self.len())
            .filter(|&i| {
                let z = self.point_at(i);
                z.re.abs() <= r && z.im.abs() <= r
            })
            .collect()
    }
}

/// Access shared by real and complex fields for norms and quadrature.
pub trait Sampled {
    fn spec(&self) -> &GridSpec;
    fn len(&self) -> usize;
    fn abs_at(&self, idx: usize) -> f64;
    fn is_finite_at(&self, idx: usize) -> bool;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check_finite(&self) -> Result<()> {
        if (0..self.len()).all(|i| self.is_finite_at(i)) {
            Ok(())
        } else {
            Err(Error::InvalidField("non-finite entries".into()))
        }
    }
}

/// Complex samples on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    spec: GridSpec,
    values: Vec<Complex64>,
}

/// Real samples on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    spec: GridSpec,
    values: Vec<f64>,
}

impl ComplexField {
    pub fn from_values(spec: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::InvalidField(format!(
                "expected {} samples, got {}",
                spec.len(),
                values.len()
            )));
        }
        let field = Self { spec, values };
        field.check_finite()?;
        Ok(field)
    }

    /// Internal constructor for values produced by finite arithmetic on
    /// already validated fields.
    pub(crate) fn from_raw(spec: GridSpec, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), spec.len());
        Self { spec, values }
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self::constant(spec, Complex64::new(0.0, 0.0))
    }

    pub fn constant(spec: GridSpec, c: Complex64) -> Self {
        Self {
            spec,
            values: vec![c; spec.len()],
        }
    }

    /// Samples `f(z)` at every lattice point.
    pub fn from_fn(spec: GridSpec, f: impl Fn(Complex64) -> Complex64) -> Self {
        let values = (0..spec.len()).map(|i| f(spec.point_at(i))).collect();
        Self { spec, values }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn get(&self, j: usize, m: usize) -> Complex64 {
        self.values[j * self.spec.n + m]
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self::from_raw(self.spec, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn map_real(&self, f: impl Fn(Complex64) -> f64) -> RealField {
        RealField::from_raw(self.spec, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(
        &self,
        other: &ComplexField,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self> {
        ensure_same_grid(&self.spec, &other.spec)?;
        Ok(Self::from_raw(
            self.spec,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn re(&self) -> RealField {
        self.map_real(|v| v.re)
    }

    pub fn im(&self) -> RealField {
        self.map_real(|v| v.im)
    }

    pub fn abs(&self) -> RealField {
        self.map_real(|v| v.norm())
    }

    pub fn mean(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.values.len() as f64
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: Complex64, other: &ComplexField, b: Complex64) -> Result<Self> {
        self.zip_map(other, |x, y| a * x + b * y)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = header(COMPLEX_MAGIC, &self.spec);
        out.reserve(self.values.len() * 16);
        for v in &self.values {
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
        out
    }

    /// Decodes a `BLF1` stream, checking that its header agrees with `spec`.
    pub fn decode(bytes: &[u8], spec: GridSpec) -> Result<Self> {
        let body = check_header(bytes, COMPLEX_MAGIC, &spec)?;
        if body.len() != spec.len() * 16 {
            return Err(Error::Format(format!(
                "expected {} payload bytes, got {}",
                spec.len() * 16,
                body.len()
            )));
        }
        let values = body
            .chunks_exact(16)
            .map(|c| Complex64::new(read_f64(&c[..8]), read_f64(&c[8..])))
            .collect();
        Self::from_values(spec, values)
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(&self.encode())?;
        Ok(())
    }

    pub fn read_from(r: &mut impl Read, spec: GridSpec) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        Self::decode(&buf, spec)
    }
}

impl RealField {
    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::InvalidField(format!(
                "expected {} samples, got {}",
                spec.len(),
                values.len()
            )));
        }
        let field = Self { spec, values };
        field.check_finite()?;
        Ok(field)
    }

    pub(crate) fn from_raw(spec: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), spec.len());
        Self { spec, values }
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self::constant(spec, 0.0)
    }

    pub fn constant(spec: GridSpec, c: f64) -> Self {
        Self {
            spec,
            values: vec![c; spec.len()],
        }
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(Complex64) -> f64) -> Self {
        let values = (0..spec.len()).map(|i| f(spec.point_at(i))).collect();
        Self { spec, values }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, j: usize, m: usize) -> f64 {
        self.values[j * self.spec.n + m]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.spec, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &RealField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        ensure_same_grid(&self.spec, &other.spec)?;
        Ok(Self::from_raw(
            self.spec,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn to_complex(&self) -> ComplexField {
        ComplexField::from_raw(
            self.spec,
            self.values
                .iter()
                .map(|&v| Complex64::new(v, 0.0))
                .collect(),
        )
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = header(REAL_MAGIC, &self.spec);
        out.reserve(self.values.len() * 8);
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Decodes a `BLR1` stream, checking that its header agrees with `spec`.
    pub fn decode(bytes: &[u8], spec: GridSpec) -> Result<Self> {
        let body = check_header(bytes, REAL_MAGIC, &spec)?;
        if body.len() != spec.len() * 8 {
            return Err(Error::Format(format!(
                "expected {} payload bytes, got {}",
                spec.len() * 8,
                body.len()
            )));
        }
        let values = body.chunks_exact(8).map(read_f64).collect();
        Self::from_values(spec, values)
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(&self.encode())?;
        Ok(())
    }

    pub fn read_from(r: &mut impl Read, spec: GridSpec) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        Self::decode(&buf, spec)
    }
}

impl Sampled for ComplexField {
    fn spec(&self) -> &GridSpec {
        &self.spec
    }
    fn len(&self) -> usize {
        self.values.len()
    }
    fn abs_at(&self, idx: usize) -> f64 {
        self.values[idx].norm()
    }
    fn is_finite_at(&self, idx: usize) -> bool {
        self.values[idx].is_finite()
    }
}

impl Sampled for RealField {
    fn spec(&self) -> &GridSpec {
        &self.spec
    }
    fn len(&self) -> usize {
        self.values.len()
    }
    fn abs_at(&self, idx: usize) -> f64 {
        self.values[idx].abs()
    }
    fn is_finite_at(&self, idx: usize) -> bool {
        self.values[idx].is_finite()
    }
}

/// Header of a serialized field: grid size and half width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryHeader {
    pub magic: [u8; 4],
    pub n: u32,
    pub half_width: f64,
}

impl BinaryHeader {
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Format("truncated header".into()));
        }
        let magic: [u8; 4] = bytes[..4].try_into().expect("four bytes");
        if &magic != COMPLEX_MAGIC && &magic != REAL_MAGIC {
            return Err(Error::Format(format!("bad magic {magic:?}")));
        }
        let n = u32::from_le_bytes(bytes[4..8].try_into().expect("four bytes"));
        let half_width = read_f64(&bytes[8..16]);
        Ok(Self {
            magic,
            n,
            half_width,
        })
    }
}

fn header(magic: &[u8; 4], spec: &GridSpec) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN);
    out.extend_from_slice(magic);
    out.extend_from_slice(&(spec.n as u32).to_le_bytes());
    out.extend_from_slice(&spec.half_width.to_le_bytes());
    out
}

fn check_header<'a>(bytes: &'a [u8], magic: &[u8; 4], spec: &GridSpec) -> Result<&'a [u8]> {
    let h = BinaryHeader::parse(bytes)?;
    if &h.magic != magic {
        return Err(Error::Format(format!(
            "expected magic {:?}, found {:?}",
            std::str::from_utf8(magic).unwrap_or("?"),
            std::str::from_utf8(&h.magic).unwrap_or("?")
        )));
    }
    if h.n as usize != spec.n || h.half_width != spec.half_width {
        return Err(Error::GridMismatch);
    }
    Ok(&bytes[HEADER_LEN..])
}

fn read_f64(b: &[u8]) -> f64 {
    f64::from_le_bytes(b.try_into().expect("eight bytes"))
}

pub(crate) fn ensure_same_grid(a: &GridSpec, b: &GridSpec) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L1,
    L2,
    Sup,
}

/// Discrete L1, L2 or sup norm over the whole grid.
pub fn norm<F: Sampled + ?Sized>(field: &F, kind: NormKind) -> Result<f64> {
    field.check_finite()?;
    let da = field.spec().cell_area();
    let n = field.len();
    Ok(match kind {
        NormKind::L1 => (0..n).map(|i| field.abs_at(i)).sum::<f64>() * da,
        NormKind::L2 => ((0..n).map(|i| field.abs_at(i).powi(2)).sum::<f64>() * da).sqrt(),
        NormKind::Sup => (0..n).map(|i| field.abs_at(i)).fold(0.0, f64::max),
    })
}

/// L2 norm restricted to a set of flat indices.
pub fn l2_on<F: Sampled + ?Sized>(field: &F, indices: &[usize]) -> f64 {
    let da = field.spec().cell_area();
    (indices
        .iter()
        .map(|&i| field.abs_at(i).powi(2))
        .sum::<f64>()
        * da)
        .sqrt()
}

/// Quadrature weights of a disk `D(center, radius)`.
///
/// Boundary cells get the fraction of a 4x4 supersample that falls inside.
#[derive(Debug, Clone)]
pub struct DiskMask {
    spec: GridSpec,
    center: Complex64,
    radius: f64,
    entries: Vec<(usize, f64)>,
}

const SUPERSAMPLE: usize = 4;

impl DiskMask {
    pub fn new(spec: GridSpec, center: Complex64, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) || !center.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "disk radius must be positive, got {radius}"
            )));
        }
        let l = spec.half_width;
        let out = center.re - radius < -l
            || center.re + radius > l
            || center.im - radius < -l
            || center.im + radius > l;
        if out {
            return Err(Error::DiskOutOfBounds {
                re: center.re,
                im: center.im,
                radius,
            });
        }
        let h = spec.spacing();
        let n = spec.n as isize;
        let cell_range = |c: f64| {
            let lo = ((c - radius + l) / h - 0.5).floor() as isize;
            let hi = ((c - radius + l) / h + 2.0 * radius / h + 0.5).ceil() as isize;
            lo..=hi
        };
        let offsets: Vec<f64> = (0..SUPERSAMPLE)
            .map(|s| ((s as f64 + 0.5) / SUPERSAMPLE as f64 - 0.5) * h)
            .collect();
        let r2 = radius * radius;
        let mut entries = Vec::new();
        for j in cell_range(center.re) {
            let x = -l + j as f64 * h - center.re;
            for m in cell_range(center.im) {
                let y = -l + m as f64 * h - center.im;
                let mut inside = 0usize;
                for ox in &offsets {
                    for oy in &offsets {
                        let (dx, dy) = (x + ox, y + oy);
                        if dx * dx + dy * dy <= r2 {
                            inside += 1;
                        }
                    }
                }
                if inside > 0 {
                    let jj = j.rem_euclid(n) as usize;
                    let mm = m.rem_euclid(n) as usize;
                    let w = inside as f64 / (SUPERSAMPLE * SUPERSAMPLE) as f64;
                    entries.push((jj * spec.n + mm, w));
                }
            }
        }
        Ok(Self {
            spec,
            center,
            radius,
            entries,
        })
    }

    pub fn center(&self) -> Complex64 {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// Nonzero `(flat index, weight)` pairs.
    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    /// Dense weight array of length `n^2`.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.spec.len()];
        for &(i, v) in &self.entries {
            w[i] = v;
        }
        w
    }

    /// Quadrature area of the disk.
    pub fn area(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w).sum::<f64>() * self.spec.cell_area()
    }
}

/// `sum weights * |v|^power * h^2`, the quadrature of `|v|^power` over the disk.
pub fn disk_integral<F: Sampled + ?Sized>(field: &F, mask: &DiskMask, power: f64) -> Result<f64> {
    ensure_same_grid(field.spec(), &mask.spec)?;
    if !(power >= 1.0 && power.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "power must be at least 1, got {power}"
        )));
    }
    let sum: f64 = if power == 1.0 {
        mask.entries.iter().map(|&(i, w)| w * field.abs_at(i)).sum()
    } else if power == 2.0 {
        mask.entries
            .iter()
            .map(|&(i, w)| w * field.abs_at(i).powi(2))
            .sum()
    } else {
        mask.entries
            .iter()
            .map(|&(i, w)| w * field.abs_at(i).powf(power))
            .sum()
    };
    Ok(sum * mask.spec.cell_area())
}

/// Region over which [`measure_below`] measures.
#[derive(Debug, Clone, Copy)]
pub enum Region<'a> {
    Disk(&'a DiskMask),
    Whole,
}

/// Area of `{|field| <= threshold}` inside `region`.
pub fn measure_below(field: &RealField, threshold: f64, region: Region<'_>) -> Result<f64> {
    field.check_finite()?;
    if !(threshold >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold must be nonnegative, got {threshold}"
        )));
    }
    let da = field.spec.cell_area();
    let sum = match region {
        Region::Whole => field.values.iter().filter(|v| v.abs() <= threshold).count() as f64,
        Region::Disk(mask) => {
            ensure_same_grid(&field.spec, &mask.spec)?;
            mask.entries
                .iter()
                .filter(|&&(i, _)| field.values[i].abs() <= threshold)
                .map(|&(_, w)| w)
                .sum()
        }
    };
    Ok(sum * da)
}
