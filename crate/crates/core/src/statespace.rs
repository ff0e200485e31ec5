//! State-space data model, lower LFT closed-loop assembly and frequency
//! response evaluation.
//!
//! The generalized plant is
//!
//! ```text
//!     dx/dt = A x + B1 w + B2 u
//!         z = C1 x + D11 w + D12 u
//!         y = C2 x + D21 w + D22 u
//! ```
//!
//! with exogenous inputs `w`, control inputs `u`, performance outputs `z` and
//! measured outputs `y`. A controller `(AK, BK, CK, DK)` closes the `y -> u`
//! loop.

use faer::{c64, MatRef};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, Matrix, Resolvent};

/// Default cap on `||(I - D22 DK)^-1||` beyond which the loop is ill-posed.
pub const DEFAULT_ILLPOSED_CAP: f64 = 1e12;

fn check_shape(block: &str, m: &Matrix, rows: usize, cols: usize) -> Result<()> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(Error::dims(block, (rows, cols), (m.nrows(), m.ncols())));
    }
    if !linalg::is_finite(m.as_ref()) {
        return Err(Error::NonFinite(block.to_string()));
    }
    Ok(())
}

/// A generic `(A, B, C, D)` realization.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    a: Matrix,
    b: Matrix,
    c: Matrix,
    d: Matrix,
}

impl StateSpace {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, d: Matrix) -> Result<Self> {
        let n = a.nrows();
        let (m, p) = (b.ncols(), c.nrows());
        check_shape("A", &a, n, n)?;
        check_shape("B", &b, n, m)?;
        check_shape("C", &c, p, n)?;
        check_shape("D", &d, p, m)?;
        Ok(Self { a, b, c, d })
    }

    pub fn a(&self) -> MatRef<'_, f64> {
        self.a.as_ref()
    }
    pub fn b(&self) -> MatRef<'_, f64> {
        self.b.as_ref()
    }
    pub fn c(&self) -> MatRef<'_, f64> {
        self.c.as_ref()
    }
    pub fn d(&self) -> MatRef<'_, f64> {
        self.d.as_ref()
    }

    /// State dimension.
    pub fn order(&self) -> usize {
        self.a.nrows()
    }
    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }
    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    /// Same realization with `C` and `D` scaled by `factor`.
    pub fn scale_output(&self, factor: f64) -> Self {
        Self {
            a: self.a.clone(),
            b: self.b.clone(),
            c: &self.c * faer::Scale(factor),
            d: &self.d * faer::Scale(factor),
        }
    }
}

/// Signal dimensions of a generalized plant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlantDims {
    pub n: usize,
    /// exogenous inputs `w`
    pub m1: usize,
    /// control inputs `u`
    pub m2: usize,
    /// performance outputs `z`
    pub p1: usize,
    /// measured outputs `y`
    pub p2: usize,
}

/// Nine-block realization of the generalized plant.
#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    pub(crate) a: Matrix,
    pub(crate) b1: Matrix,
    pub(crate) b2: Matrix,
    pub(crate) c1: Matrix,
    pub(crate) c2: Matrix,
    pub(crate) d11: Matrix,
    pub(crate) d12: Matrix,
    pub(crate) d21: Matrix,
    pub(crate) d22: Matrix,
}

/// The nine plant blocks in the order `A, B1, B2, C1, C2, D11, D12, D21, D22`.
pub struct PlantBlocks {
    pub a: Matrix,
    pub b1: Matrix,
    pub b2: Matrix,
    pub c1: Matrix,
    pub c2: Matrix,
    pub d11: Matrix,
    pub d12: Matrix,
    pub d21: Matrix,
    pub d22: Matrix,
}

impl Plant {
    /// Validates dimensions and finiteness of all nine blocks.
    pub fn new(blocks: PlantBlocks) -> Result<Self> {
        let PlantBlocks {
            a,
            b1,
            b2,
            c1,
            c2,
            d11,
            d12,
            d21,
            d22,
        } = blocks;
        let dims = PlantDims {
            n: a.nrows(),
            m1: b1.ncols(),
            m2: b2.ncols(),
            p1: c1.nrows(),
            p2: c2.nrows(),
        };
        Self::check(&dims)?;
        let PlantDims { n, m1, m2, p1, p2 } = dims;
        check_shape("A", &a, n, n)?;
        check_shape("B1", &b1, n, m1)?;
        check_shape("B2", &b2, n, m2)?;
        check_shape("C1", &c1, p1, n)?;
        check_shape("C2", &c2, p2, n)?;
        check_shape("D11", &d11, p1, m1)?;
        check_shape("D12", &d12, p1, m2)?;
        check_shape("D21", &d21, p2, m1)?;
        check_shape("D22", &d22, p2, m2)?;
        Ok(Self {
            a,
            b1,
            b2,
            c1,
            c2,
            d11,
            d12,
            d21,
            d22,
        })
    }

    fn check(d: &PlantDims) -> Result<()> {
        for (name, v) in [("n", d.n), ("m1", d.m1), ("m2", d.m2), ("p1", d.p1), ("p2", d.p2)] {
            if v == 0 {
                return Err(Error::DimensionMismatch {
                    block: name.to_string(),
                    expected: ">= 1".into(),
                    found: "0".into(),
                });
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> PlantDims {
        PlantDims {
            n: self.a.nrows(),
            m1: self.b1.ncols(),
            m2: self.b2.ncols(),
            p1: self.c1.nrows(),
            p2: self.c2.nrows(),
        }
    }

    pub fn a(&self) -> MatRef<'_, f64> {
        self.a.as_ref()
    }
    pub fn b1(&self) -> MatRef<'_, f64> {
        self.b1.as_ref()
    }
    pub fn b2(&self) -> MatRef<'_, f64> {
        self.b2.as_ref()
    }
    pub fn c1(&self) -> MatRef<'_, f64> {
        self.c1.as_ref()
    }
    pub fn c2(&self) -> MatRef<'_, f64> {
        self.c2.as_ref()
    }
    pub fn d11(&self) -> MatRef<'_, f64> {
        self.d11.as_ref()
    }
    pub fn d12(&self) -> MatRef<'_, f64> {
        self.d12.as_ref()
    }
    pub fn d21(&self) -> MatRef<'_, f64> {
        self.d21.as_ref()
    }
    pub fn d22(&self) -> MatRef<'_, f64> {
        self.d22.as_ref()
    }

    /// Controller dimensions for an order-`order` controller of this plant.
    pub fn controller_dims(&self, order: usize) -> ControllerDims {
        let d = self.dims();
        ControllerDims {
            order,
            inputs: d.p2,
            outputs: d.m2,
        }
    }

    /// Open-loop realization of the full plant `[w; u] -> [z; y]`.
    pub fn open_loop(&self) -> StateSpace {
        let d = self.dims();
        let (m, p) = (d.m1 + d.m2, d.p1 + d.p2);
        let b = Matrix::from_fn(d.n, m, |i, j| {
            if j < d.m1 {
                self.b1[(i, j)]
            } else {
                self.b2[(i, j - d.m1)]
            }
        });
        let c = Matrix::from_fn(p, d.n, |i, j| {
            if i < d.p1 {
                self.c1[(i, j)]
            } else {
                self.c2[(i - d.p1, j)]
            }
        });
        let dd = Matrix::from_fn(p, m, |i, j| match (i < d.p1, j < d.m1) {
            (true, true) => self.d11[(i, j)],
            (true, false) => self.d12[(i, j - d.m1)],
            (false, true) => self.d21[(i - d.p1, j)],
            (false, false) => self.d22[(i - d.p1, j - d.m1)],
        });
        StateSpace {
            a: self.a.clone(),
            b,
            c,
            d: dd,
        }
    }
}

/// Which input or output channel of the plant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    /// `w` for inputs, `z` for outputs
    Exogenous,
    /// `u` for inputs, `y` for outputs
    Control,
}

impl TryFrom<u8> for Channel {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Channel::Exogenous),
            2 => Ok(Channel::Control),
            _ => Err(Error::InvalidOption(format!("subsystem index must be 1 or 2, got {v}"))),
        }
    }
}

/// Returns `G_ij = (A, B_j, C_i, D_ij)`.
pub fn plant_subsystem(plant: &Plant, output: Channel, input: Channel) -> StateSpace {
    let b = match input {
        Channel::Exogenous => plant.b1.clone(),
        Channel::Control => plant.b2.clone(),
    };
    let (c, d) = match (output, input) {
        (Channel::Exogenous, Channel::Exogenous) => (plant.c1.clone(), plant.d11.clone()),
        (Channel::Exogenous, Channel::Control) => (plant.c1.clone(), plant.d12.clone()),
        (Channel::Control, Channel::Exogenous) => (plant.c2.clone(), plant.d21.clone()),
        (Channel::Control, Channel::Control) => (plant.c2.clone(), plant.d22.clone()),
    };
    StateSpace {
        a: plant.a.clone(),
        b,
        c,
        d,
    }
}

/// Order and input/output sizes of a controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ControllerDims {
    /// number of controller states `nK`
    pub order: usize,
    /// controller inputs (plant measurements, `p2`)
    pub inputs: usize,
    /// controller outputs (plant controls, `m2`)
    pub outputs: usize,
}

impl ControllerDims {
    /// Length of the packed parameter vector.
    pub fn num_params(&self) -> usize {
        let (nk, p, m) = (self.order, self.inputs, self.outputs);
        nk * nk + nk * p + m * nk + m * p
    }
}

/// Fixed-order controller `(AK, BK, CK, DK)`. Order 0 is static output
/// feedback with empty `AK`, `BK`, `CK`.
#[derive(Debug, Clone, PartialEq)]
pub struct Controller {
    pub(crate) ak: Matrix,
    pub(crate) bk: Matrix,
    pub(crate) ck: Matrix,
    pub(crate) dk: Matrix,
}

impl Controller {
    pub fn new(ak: Matrix, bk: Matrix, ck: Matrix, dk: Matrix) -> Result<Self> {
        let nk = ak.nrows();
        let (p, m) = (dk.ncols(), dk.nrows());
        check_shape("AK", &ak, nk, nk)?;
        check_shape("BK", &bk, nk, p)?;
        check_shape("CK", &ck, m, nk)?;
        check_shape("DK", &dk, m, p)?;
        Ok(Self { ak, bk, ck, dk })
    }

    /// Static output feedback `u = DK y`.
    pub fn static_gain(dk: Matrix) -> Result<Self> {
        let (m, p) = (dk.nrows(), dk.ncols());
        Self::new(Matrix::zeros(0, 0), Matrix::zeros(0, p), Matrix::zeros(m, 0), dk)
    }

    pub fn zeros(dims: ControllerDims) -> Self {
        let ControllerDims {
            order: nk,
            inputs: p,
            outputs: m,
        } = dims;
        Self {
            ak: Matrix::zeros(nk, nk),
            bk: Matrix::zeros(nk, p),
            ck: Matrix::zeros(m, nk),
            dk: Matrix::zeros(m, p),
        }
    }

    pub fn dims(&self) -> ControllerDims {
        ControllerDims {
            order: self.ak.nrows(),
            inputs: self.dk.ncols(),
            outputs: self.dk.nrows(),
        }
    }

    pub fn order(&self) -> usize {
        self.ak.nrows()
    }

    pub fn ak(&self) -> MatRef<'_, f64> {
        self.ak.as_ref()
    }
    pub fn bk(&self) -> MatRef<'_, f64> {
        self.bk.as_ref()
    }
    pub fn ck(&self) -> MatRef<'_, f64> {
        self.ck.as_ref()
    }
    pub fn dk(&self) -> MatRef<'_, f64> {
        self.dk.as_ref()
    }

    /// Realization of the controller transfer function.
    pub fn as_state_space(&self) -> StateSpace {
        StateSpace {
            a: self.ak.clone(),
            b: self.bk.clone(),
            c: self.ck.clone(),
            d: self.dk.clone(),
        }
    }

    /// Equivalent realization under the state transformation `x -> T x`.
    pub fn transformed(&self, t: MatRef<'_, f64>) -> Result<Self> {
        let t_inv = linalg::inverse(t).ok_or(Error::SingularResolvent)?;
        let ak = linalg::mul(linalg::mul(t, self.ak.as_ref()).as_ref(), t_inv.as_ref());
        let bk = linalg::mul(t, self.bk.as_ref());
        let ck = linalg::mul(self.ck.as_ref(), t_inv.as_ref());
        Self::new(ak, bk, ck, self.dk.clone())
    }

    fn check_against(&self, plant: &Plant) -> Result<()> {
        let pd = plant.dims();
        let kd = self.dims();
        if kd.inputs != pd.p2 || kd.outputs != pd.m2 {
            return Err(Error::dims("DK", (pd.m2, pd.p2), (kd.outputs, kd.inputs)));
        }
        Ok(())
    }
}

/// Flat controller parameters: column-major `AK`, `BK`, `CK`, `DK` in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn push_col_major(out: &mut Vec<f64>, m: MatRef<'_, f64>) {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            out.push(m[(i, j)]);
        }
    }
}

fn take_col_major(values: &[f64], rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |i, j| values[j * rows + i])
}

/// Packs a controller into its parameter vector.
pub fn pack(k: &Controller) -> ParamVector {
    let mut v = Vec::with_capacity(k.dims().num_params());
    push_col_major(&mut v, k.ak.as_ref());
    push_col_major(&mut v, k.bk.as_ref());
    push_col_major(&mut v, k.ck.as_ref());
    push_col_major(&mut v, k.dk.as_ref());
    ParamVector(v)
}

/// Inverse of [`pack`].
pub fn unpack(values: &[f64], dims: ControllerDims) -> Result<Controller> {
    let expected = dims.num_params();
    if values.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            found: values.len(),
        });
    }
    let ControllerDims {
        order: nk,
        inputs: p,
        outputs: m,
    } = dims;
    let mut off = 0;
    let mut next = |rows: usize, cols: usize| {
        let mat = take_col_major(&values[off..off + rows * cols], rows, cols);
        off += rows * cols;
        mat
    };
    let ak = next(nk, nk);
    let bk = next(nk, p);
    let ck = next(m, nk);
    let dk = next(m, p);
    Controller::new(ak, bk, ck, dk)
}

/// Packs the four gradient blocks of a scalar function of the controller.
pub(crate) fn pack_blocks(
    ak: MatRef<'_, f64>,
    bk: MatRef<'_, f64>,
    ck: MatRef<'_, f64>,
    dk: MatRef<'_, f64>,
) -> Vec<f64> {
    let mut v = Vec::new();
    push_col_major(&mut v, ak);
    push_col_major(&mut v, bk);
    push_col_major(&mut v, ck);
    push_col_major(&mut v, dk);
    v
}

/// The closed loop written as a static gain `Kaug = [[DK, CK], [BK, AK]]`
/// acting on a plant augmented with the controller states.
///
/// With `Faug = (I - D22aug Kaug)^-1`, `Eaug = (I - Kaug D22aug)^-1` and
/// `Q = Kaug Faug`:
///
/// ```text
///   A_cl = Aaug + B2aug Q C2aug      B_cl = B1aug + B2aug Q D21aug
///   C_cl = C1aug + D12aug Q C2aug    D_cl = D11 + D12aug Q D21aug
/// ```
///
/// and a perturbation of `Kaug` maps to `dQ = Eaug dKaug Faug`, which is what
/// the gradient code uses.
pub(crate) struct Interconnection {
    pub closed: StateSpace,
    pub b2_aug: Matrix,
    pub c2_aug: Matrix,
    pub d12_aug: Matrix,
    pub d21_aug: Matrix,
    /// `None` when `D22 = 0`, in which case both inverses are the identity.
    inverses: Option<(Matrix, Matrix)>,
    nk: usize,
    m2: usize,
    p2: usize,
}

impl Interconnection {
    pub fn new(plant: &Plant, k: &Controller, cap: f64) -> Result<Self> {
        k.check_against(plant)?;
        let PlantDims { n, m1, m2, p1, p2 } = plant.dims();
        let nk = k.order();
        let (nc, mu, py) = (n + nk, m2 + nk, p2 + nk);

        let k_aug = Matrix::from_fn(mu, py, |i, j| match (i < m2, j < p2) {
            (true, true) => k.dk[(i, j)],
            (true, false) => k.ck[(i, j - p2)],
            (false, true) => k.bk[(i - m2, j)],
            (false, false) => k.ak[(i - m2, j - p2)],
        });
        let b2_aug = Matrix::from_fn(nc, mu, |i, j| match (i < n, j < m2) {
            (true, true) => plant.b2[(i, j)],
            (false, false) => f64::from(i - n == j - m2),
            _ => 0.0,
        });
        let c2_aug = Matrix::from_fn(py, nc, |i, j| match (i < p2, j < n) {
            (true, true) => plant.c2[(i, j)],
            (false, false) => f64::from(i - p2 == j - n),
            _ => 0.0,
        });
        let d12_aug = Matrix::from_fn(p1, mu, |i, j| if j < m2 { plant.d12[(i, j)] } else { 0.0 });
        let d21_aug = Matrix::from_fn(py, m1, |i, j| if i < p2 { plant.d21[(i, j)] } else { 0.0 });

        let (q, inverses) = if linalg::is_zero(plant.d22.as_ref()) {
            (k_aug, None)
        } else {
            let d22_aug = Matrix::from_fn(py, mu, |i, j| if i < p2 && j < m2 { plant.d22[(i, j)] } else { 0.0 });
            let eye_y = Matrix::identity(py, py);
            let eye_u = Matrix::identity(mu, mu);
            let f_aug = linalg::inverse((&eye_y - linalg::mul(d22_aug.as_ref(), k_aug.as_ref())).as_ref())
                .ok_or(Error::IllPosed(f64::INFINITY))?;
            let e_aug = linalg::inverse((&eye_u - linalg::mul(k_aug.as_ref(), d22_aug.as_ref())).as_ref())
                .ok_or(Error::IllPosed(f64::INFINITY))?;
            let norm = linalg::sigma_max(f_aug.as_ref())?;
            if !(norm <= cap) {
                return Err(Error::IllPosed(norm));
            }
            (linalg::mul(k_aug.as_ref(), f_aug.as_ref()), Some((e_aug, f_aug)))
        };

        let a_aug = Matrix::from_fn(nc, nc, |i, j| if i < n && j < n { plant.a[(i, j)] } else { 0.0 });
        let b1_aug = Matrix::from_fn(nc, m1, |i, j| if i < n { plant.b1[(i, j)] } else { 0.0 });
        let c1_aug = Matrix::from_fn(p1, nc, |i, j| if j < n { plant.c1[(i, j)] } else { 0.0 });

        let b2q = linalg::mul(b2_aug.as_ref(), q.as_ref());
        let d12q = linalg::mul(d12_aug.as_ref(), q.as_ref());
        let a_cl = &a_aug + linalg::mul(b2q.as_ref(), c2_aug.as_ref());
        let b_cl = &b1_aug + linalg::mul(b2q.as_ref(), d21_aug.as_ref());
        let c_cl = &c1_aug + linalg::mul(d12q.as_ref(), c2_aug.as_ref());
        let d_cl = &plant.d11 + linalg::mul(d12q.as_ref(), d21_aug.as_ref());

        Ok(Self {
            closed: StateSpace::new(a_cl, b_cl, c_cl, d_cl)?,
            b2_aug,
            c2_aug,
            d12_aug,
            d21_aug,
            inverses,
            nk,
            m2,
            p2,
        })
    }

    /// Maps `G_Q = df/dQ` to the packed gradient with respect to the controller.
    pub fn chain_to_params(&self, g_q: &Matrix) -> Vec<f64> {
        let g_k = match &self.inverses {
            None => g_q.clone(),
            Some((e_aug, f_aug)) => {
                let t = linalg::mul(e_aug.transpose(), g_q.as_ref());
                linalg::mul(t.as_ref(), f_aug.transpose())
            }
        };
        let (nk, m2, p2) = (self.nk, self.m2, self.p2);
        let g = g_k.as_ref();
        pack_blocks(
            g.submatrix(m2, p2, nk, nk),
            g.submatrix(m2, 0, nk, p2),
            g.submatrix(0, p2, m2, nk),
            g.submatrix(0, 0, m2, p2),
        )
    }
}

/// Closed-loop realization of the lower LFT `F_l(G, K)` of order `n + nK`.
pub fn lft_closed_loop(plant: &Plant, k: &Controller) -> Result<StateSpace> {
    lft_closed_loop_with_cap(plant, k, DEFAULT_ILLPOSED_CAP)
}

/// [`lft_closed_loop`] with an explicit well-posedness cap.
pub fn lft_closed_loop_with_cap(plant: &Plant, k: &Controller, cap: f64) -> Result<StateSpace> {
    Ok(Interconnection::new(plant, k, cap)?.closed)
}

/// `C (sI - A)^-1 B + D`, by one LU solve.
pub fn transfer_eval(sys: &StateSpace, s: c64) -> Result<CMatrix> {
    let res = Resolvent::new(sys.a(), s)?;
    Ok(transfer_with(sys, &res))
}

pub(crate) fn transfer_with(sys: &StateSpace, res: &Resolvent) -> CMatrix {
    let x = res.solve(linalg::to_complex(sys.b()).as_ref());
    let cx = linalg::cmul(linalg::to_complex(sys.c()).as_ref(), x.as_ref());
    cx + linalg::to_complex(sys.d())
}
