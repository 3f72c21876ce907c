//! Explicit 8th-order Runge-Kutta (Dormand-Prince 8(5,3) tableau, fixed step).

use crate::waveform::C64;

pub const STAGES: usize = 12;

/// Butcher tableau: `a[s][j]` for `j < s`, weights `b`, nodes `c`.
pub struct Tableau {
    pub a: [[f64; STAGES]; STAGES],
    pub b: [f64; STAGES],
    pub c: [f64; STAGES],
}

const A21: f64 = 5.26001519587677318785587544488E-2;
const A31: f64 = 1.97250569845378994544595329183E-2;
const A32: f64 = 5.91751709536136983633785987549E-2;
const A41: f64 = 2.95875854768068491816892993775E-2;
const A43: f64 = 8.87627564304205475450678981324E-2;
const A51: f64 = 2.41365134159266685502369798665E-1;
const A53: f64 = -8.84549479328286085344864962717E-1;
const A54: f64 = 9.24834003261792003115737966543E-1;
const A61: f64 = 3.7037037037037037037037037037E-2;
const A64: f64 = 1.70828608729473871279604482173E-1;
const A65: f64 = 1.25467687566822425016691814123E-1;
const A71: f64 = 3.7109375E-2;
const A74: f64 = 1.70252211019544039314978060272E-1;
const A75: f64 = 6.02165389804559606850219397283E-2;
const A76: f64 = -1.7578125E-2;
const A81: f64 = 3.70920001185047927108779319836E-2;
const A84: f64 = 1.70383925712239993810214054705E-1;
const A85: f64 = 1.07262030446373284651809199168E-1;
const A86: f64 = -1.53194377486244017527936158236E-2;
const A87: f64 = 8.27378916381402288758473766002E-3;
const A91: f64 = 6.24110958716075717114429577812E-1;
const A94: f64 = -3.36089262944694129406857109825E0;
const A95: f64 = -8.68219346841726006818189891453E-1;
const A96: f64 = 2.75920996994467083049415600797E1;
const A97: f64 = 2.01540675504778934086186788979E1;
const A98: f64 = -4.34898841810699588477366255144E1;
const A101: f64 = 4.77662536438264365890433908527E-1;
const A104: f64 = -2.48811461997166764192642586468E0;
const A105: f64 = -5.90290826836842996371446475743E-1;
const A106: f64 = 2.12300514481811942347288949897E1;
const A107: f64 = 1.52792336328824235832596922938E1;
const A108: f64 = -3.32882109689848629194453265587E1;
const A109: f64 = -2.03312017085086261358222928593E-2;
const A111: f64 = -9.3714243008598732571704021658E-1;
const A114: f64 = 5.18637242884406370830023853209E0;
const A115: f64 = 1.09143734899672957818500254654E0;
const A116: f64 = -8.14978701074692612513997267357E0;
const A117: f64 = -1.85200656599969598641566180701E1;
const A118: f64 = 2.27394870993505042818970056734E1;
const A119: f64 = 2.49360555267965238987089396762E0;
const A1110: f64 = -3.0467644718982195003823669022E0;
const A121: f64 = 2.27331014751653820792359768449E0;
const A124: f64 = -1.05344954667372501984066689879E1;
const A125: f64 = -2.00087205822486249909675718444E0;
const A126: f64 = -1.79589318631187989172765950534E1;
const A127: f64 = 2.79488845294199600508499808837E1;
const A128: f64 = -2.85899827713502369474065508674E0;
const A129: f64 = -8.87285693353062954433549289258E0;
const A1210: f64 = 1.23605671757943030647266201528E1;
const A1211: f64 = 6.43392746015763530355970484046E-1;

const B1: f64 = 5.42937341165687622380535766363E-2;
const B6: f64 = 4.45031289275240888144113950566E0;
const B7: f64 = 1.89151789931450038304281599044E0;
const B8: f64 = -5.8012039600105847814672114227E0;
const B9: f64 = 3.1116436695781989440891606237E-1;
const B10: f64 = -1.52160949662516078556178806805E-1;
const B11: f64 = 2.01365400804030348374776537501E-1;
const B12: f64 = 4.47106157277725905176885569043E-2;

const C2: f64 = 0.526001519587677318785587544488E-01;
const C3: f64 = 0.789002279381515978178381316732E-01;
const C4: f64 = 0.118350341907227396726757197510E+00;
const C5: f64 = 0.281649658092772603273242802490E+00;
const C6: f64 = 0.333333333333333333333333333333E+00;
const C7: f64 = 0.25E+00;
const C8: f64 = 0.307692307692307692307692307692E+00;
const C9: f64 = 0.651282051282051282051282051282E+00;
const C10: f64 = 0.6E+00;
const C11: f64 = 0.857142857142857142857142857142E+00;

pub const DOP853: Tableau = Tableau {
    a: [
        [0.0; STAGES],
        [A21, 0., 0., 0., 0., 0., 0., 0., 0., 0., 0., 0.],
        [A31, A32, 0., 0., 0., 0., 0., 0., 0., 0., 0., 0.],
        [A41, 0., A43, 0., 0., 0., 0., 0., 0., 0., 0., 0.],
        [A51, 0., A53, A54, 0., 0., 0., 0., 0., 0., 0., 0.],
        [A61, 0., 0., A64, A65, 0., 0., 0., 0., 0., 0., 0.],
        [A71, 0., 0., A74, A75, A76, 0., 0., 0., 0., 0., 0.],
        [A81, 0., 0., A84, A85, A86, A87, 0., 0., 0., 0., 0.],
        [A91, 0., 0., A94, A95, A96, A97, A98, 0., 0., 0., 0.],
        [A101, 0., 0., A104, A105, A106, A107, A108, A109, 0., 0., 0.],
        [A111, 0., 0., A114, A115, A116, A117, A118, A119, A1110, 0., 0.],
        [A121, 0., 0., A124, A125, A126, A127, A128, A129, A1210, A1211, 0.],
    ],
    b: [B1, 0., 0., 0., 0., B6, B7, B8, B9, B10, B11, B12],
    c: [0., C2, C3, C4, C5, C6, C7, C8, C9, C10, C11, 1.0],
};

/// Reusable stage storage for a complex state of fixed length.
pub struct Rk8 {
    k: Vec<Vec<C64>>,
    tmp: Vec<C64>,
}

impl Rk8 {
    pub fn new(n: usize) -> Self {
        Self {
            k: vec![vec![C64::new(0.0, 0.0); n]; STAGES],
            tmp: vec![C64::new(0.0, 0.0); n],
        }
    }

    /// Advances `y` from `t` to `t + h` in place.
    pub fn step<F>(&mut self, f: &mut F, t: f64, y: &mut [C64], h: f64)
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let tab = &DOP853;
        let n = y.len();
        for s in 0..STAGES {
            self.tmp.copy_from_slice(y);
            for j in 0..s {
                let a = tab.a[s][j];
                if a != 0.0 {
                    let ha = h * a;
                    let kj = &self.k[j];
                    for i in 0..n {
                        self.tmp[i] += kj[i] * ha;
                    }
                }
            }
            let (_, rest) = self.k.split_at_mut(s);
            f(t + tab.c[s] * h, &self.tmp, &mut rest[0]);
        }
        for s in 0..STAGES {
            let hb = h * tab.b[s];
            if hb != 0.0 {
                for i in 0..n {
                    y[i] += self.k[s][i] * hb;
                }
            }
        }
    }
}

/// Stage and update polynomials of the scheme applied to `y' = z/h · y + forcing`.
///
/// For a scalar mode with rate `a` (so `z = h·a`) driven by external stage
/// values `u_l`, the stage values are `α_s·y + Σ_l β_{s,l}·h·u_l` and the
/// step result is `R·y + Σ_l γ_l·h·u_l`.
#[derive(Clone)]
pub struct LinearStages {
    pub alpha: [C64; STAGES],
    pub beta: [[C64; STAGES]; STAGES],
    pub r: C64,
    pub gamma: [C64; STAGES],
}

impl LinearStages {
    pub fn new(z: C64) -> Self {
        let tab = &DOP853;
        let zero = C64::new(0.0, 0.0);
        let mut alpha = [zero; STAGES];
        let mut beta = [[zero; STAGES]; STAGES];
        for s in 0..STAGES {
            let mut acc = C64::new(1.0, 0.0);
            for j in 0..s {
                acc += z * tab.a[s][j] * alpha[j];
            }
            alpha[s] = acc;
            for l in 0..s {
                let mut b = C64::new(tab.a[s][l], 0.0);
                for j in (l + 1)..s {
                    b += z * tab.a[s][j] * beta[j][l];
                }
                beta[s][l] = b;
            }
        }
        let mut r = C64::new(1.0, 0.0);
        let mut gamma = [zero; STAGES];
        for j in 0..STAGES {
            r += z * tab.b[j] * alpha[j];
        }
        for l in 0..STAGES {
            let mut g = C64::new(tab.b[l], 0.0);
            for j in (l + 1)..STAGES {
                g += z * tab.b[j] * beta[j][l];
            }
            gamma[l] = g;
        }
        Self { alpha, beta, r, gamma }
    }
}
