//! Built-in tableaus.
//!
//! | name            | N | stages | notes                                                   |
//! |-----------------|---|--------|---------------------------------------------------------|
//! | `imex-sd2`      | 2 | (3,2)  | order 2, stability-decoupled; free parameter `beta`     |
//! | `imex-tr3`      | 2 | (4,4)  | transposed IMEX pair around Kvaerno ESDIRK 3/2          |
//! | `imex-tr4`      | 2 | (5,5)  | transposed IMEX pair around Kvaerno ESDIRK 4/3          |
//! | `imex-mono2`    | 2 | (2,2)  | order 2, SSP explicit part; parameters `alpha`, `gamma` |
//! | `imim-dirk2`    | 2 | (2,2)  | DIRK-DIRK, algebraically stable and decoupled           |
//! | `euler`         | 1 | 1      | forward Euler                                           |
//! | `implicit-euler`| 1 | 1      | backward Euler                                          |
//! | `rk4`           | 1 | 4      | classical fourth order                                  |
//! | `ssp-rk2`       | 1 | 2      | Heun / SSP(2,2)                                         |
//!
//! In the two-component IMEX entries component 0 is explicit and component 1
//! is implicit.

use serde_json::json;

use crate::error::{GarkError, Result};
use crate::linalg::{Matrix, Vector};
use crate::tableau::{GarkTableau, Metadata};

/// Default free parameter of `imex-sd2`.
pub const DEFAULT_BETA: f64 = -0.25;
/// Default coupling parameter of `imex-mono2`.
pub const DEFAULT_ALPHA: f64 = 0.5;

/// Default diagonal of `imex-mono2`: the root of `g^2 - 2g + 1/2 = 0` below one.
pub fn default_gamma() -> f64 {
    1.0 - std::f64::consts::SQRT_2 / 2.0
}

/// Optional free coefficients for parameterized entries.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RegistryParams {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
}

impl RegistryParams {
    pub fn alpha(alpha: f64) -> Self {
        Self {
            alpha: Some(alpha),
            ..Self::default()
        }
    }

    pub fn beta(beta: f64) -> Self {
        Self {
            beta: Some(beta),
            ..Self::default()
        }
    }

    fn is_empty(&self) -> bool {
        self.alpha.is_none() && self.beta.is_none() && self.gamma.is_none()
    }
}

pub const NAMES: &[&str] = &[
    "imex-sd2",
    "imex-tr3",
    "imex-tr4",
    "imex-mono2",
    "imim-dirk2",
    "euler",
    "implicit-euler",
    "rk4",
    "ssp-rk2",
];

pub fn names() -> &'static [&'static str] {
    NAMES
}

/// Looks up a built-in tableau with default parameters.
pub fn get(name: &str) -> Result<GarkTableau> {
    get_with(name, &RegistryParams::default())
}

/// Looks up a built-in tableau, substituting the given free parameters.
pub fn get_with(name: &str, params: &RegistryParams) -> Result<GarkTableau> {
    for (label, value) in [
        ("alpha", params.alpha),
        ("beta", params.beta),
        ("gamma", params.gamma),
    ] {
        if let Some(x) = value {
            if !x.is_finite() {
                return Err(GarkError::Parameter(format!("{label} must be finite, got {x}")));
            }
        }
    }
    let accepts = |allowed: &[&str]| -> Result<()> {
        for (label, value) in [
            ("alpha", params.alpha),
            ("beta", params.beta),
            ("gamma", params.gamma),
        ] {
            if value.is_some() && !allowed.contains(&label) {
                return Err(GarkError::Parameter(format!("'{name}' has no parameter {label}")));
            }
        }
        Ok(())
    };
    match name {
        "imex-sd2" => {
            accepts(&["beta"])?;
            imex_sd2(params.beta.unwrap_or(DEFAULT_BETA))
        }
        "imex-mono2" => {
            accepts(&["alpha", "gamma"])?;
            imex_mono2(
                params.alpha.unwrap_or(DEFAULT_ALPHA),
                params.gamma.unwrap_or_else(default_gamma),
            )
        }
        _ => {
            if !params.is_empty() {
                return Err(GarkError::Parameter(format!("'{name}' takes no parameters")));
            }
            match name {
                "imex-tr3" => imex_tr3(),
                "imex-tr4" => imex_tr4(),
                "imim-dirk2" => imim_dirk2(),
                "euler" => GarkTableau::single("euler", mat(1, &[0.0]), vec_of(&[1.0])),
                "implicit-euler" => GarkTableau::single("implicit-euler", mat(1, &[1.0]), vec_of(&[1.0])),
                "rk4" => rk4(),
                "ssp-rk2" => {
                    GarkTableau::single("ssp-rk2", mat(2, &[0.0, 0.0, 1.0, 0.0]), vec_of(&[0.5, 0.5]))
                }
                _ => Err(GarkError::UnknownTableau(name.to_string())),
            }
        }
    }
}

fn mat(rows: usize, v: &[f64]) -> Matrix {
    Matrix::from_row_slice(rows, v.len() / rows, v)
}

fn vec_of(v: &[f64]) -> Vector {
    Vector::from_column_slice(v)
}

fn meta(pairs: &[(&str, f64)]) -> Metadata {
    pairs.iter().map(|(k, v)| (k.to_string(), json!(v))).collect()
}

fn rk4() -> Result<GarkTableau> {
    GarkTableau::single(
        "rk4",
        mat(
            4,
            &[
                0.0, 0.0, 0.0, 0.0, //
                0.5, 0.0, 0.0, 0.0, //
                0.0, 0.5, 0.0, 0.0, //
                0.0, 0.0, 1.0, 0.0,
            ],
        ),
        vec_of(&[1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0]),
    )
}

/// Second order, stability-decoupled IMEX pair with a three-stage explicit
/// and a two-stage implicit method.
pub fn imex_sd2(beta: f64) -> Result<GarkTableau> {
    let aee = mat(3, &[0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 1.0 - beta, beta, 0.0]);
    let aei = mat(3, &[0.0, 0.0, 0.5, 0.0, 0.5, 0.5]);
    let aie = mat(2, &[0.25, 0.0, 0.0, 0.25, 0.5, 0.0]);
    let aii = mat(2, &[0.25, 0.0, 0.5, 0.25]);
    let be = vec_of(&[0.25, 0.5, 0.25]);
    let bi = vec_of(&[0.5, 0.5]);
    Ok(
        GarkTableau::new("imex-sd2", vec![vec![aee, aei], vec![aie, aii]], vec![be, bi])?
            .with_metadata(meta(&[("beta", beta)])),
    )
}

/// Second order IMEX pair: SSP(2,2) explicit part, stiffly accurate
/// two-stage SDIRK implicit part, coupling parameter `alpha`.
pub fn imex_mono2(alpha: f64, gamma: f64) -> Result<GarkTableau> {
    let aee = mat(2, &[0.0, 0.0, 1.0, 0.0]);
    let aei = mat(2, &[0.0, 0.0, 1.0, 0.0]);
    let aie = mat(2, &[gamma, 0.0, alpha, 1.0 - alpha]);
    let aii = mat(2, &[gamma, 0.0, 1.0 - gamma, gamma]);
    let be = vec_of(&[0.5, 0.5]);
    let bi = vec_of(&[1.0 - gamma, gamma]);
    Ok(
        GarkTableau::new("imex-mono2", vec![vec![aee, aei], vec![aie, aii]], vec![be, bi])?
            .with_metadata(meta(&[("alpha", alpha), ("gamma", gamma)])),
    )
}

/// Algebraically stable, stability-decoupled DIRK-DIRK pair.
pub fn imim_dirk2() -> Result<GarkTableau> {
    let a11 = mat(2, &[1.0 / 8.0, 0.0, 1.0 / 4.0, 3.0 / 8.0]);
    let a12 = mat(2, &[0.0, 0.0, 2.0 / 3.0, 0.0]);
    let a21 = mat(2, &[1.0 / 4.0, 0.0, 1.0 / 4.0, 3.0 / 4.0]);
    let a22 = mat(2, &[1.0 / 3.0, 0.0, 2.0 / 3.0, 1.0 / 6.0]);
    let b1 = vec_of(&[1.0 / 4.0, 3.0 / 4.0]);
    let b2 = vec_of(&[2.0 / 3.0, 1.0 / 3.0]);
    GarkTableau::new("imim-dirk2", vec![vec![a11, a12], vec![a21, a22]], vec![b1, b2])
}

/// Transposed IMEX pair built on Kvaerno's four-stage ESDIRK 3/2.
pub fn imex_tr3() -> Result<GarkTableau> {
    let g = 0.435866521508459;
    let ai = mat(
        4,
        &[
            0.0,
            0.0,
            0.0,
            0.0, //
            g,
            g,
            0.0,
            0.0, //
            0.490563388421781,
            0.073570090069760,
            g,
            0.0, //
            0.308809969976747,
            1.490563388421781,
            -1.235239879906987,
            g,
        ],
    );
    let b = vec_of(&[
        0.308809969976747,
        1.490563388421781,
        -1.235239879906987,
        0.435866521508459,
    ]);
    let ae = mat(
        4,
        &[
            0.0,
            0.0,
            0.0,
            0.0, //
            0.871733043016918,
            0.0,
            0.0,
            0.0, //
            1.0,
            0.0,
            0.0,
            0.0, //
            0.5,
            0.916993298352020,
            -0.416993298352020,
            0.0,
        ],
    );
    GarkTableau::transposed_imex("imex-tr3", &ae, &b, &ai, &b)
}

/// Transposed IMEX pair built on Kvaerno's five-stage ESDIRK 4/3.
pub fn imex_tr4() -> Result<GarkTableau> {
    let g = 0.572816062482134;
    let ai = mat(
        5,
        &[
            0.0,
            0.0,
            0.0,
            0.0,
            0.0, //
            0.572816062482134,
            g,
            0.0,
            0.0,
            0.0, //
            0.167235462027210,
            -0.142946536857034,
            g,
            0.0,
            0.0, //
            0.262603290252694,
            -0.311904327420564,
            0.476484974685735,
            g,
            0.0, //
            0.197216548312835,
            0.176843783906372,
            0.815442181350836,
            -0.762318576052177,
            g,
        ],
    );
    let b = vec_of(&[
        0.197216548312835,
        0.176843783906372,
        0.815442181350836,
        -0.762318576052177,
        0.572816062482134,
    ]);
    let ae = mat(
        5,
        &[
            0.0,
            0.0,
            0.0,
            0.0,
            0.0, //
            1.145632124964268,
            0.0,
            0.0,
            0.0,
            0.0, //
            0.486402211775915,
            0.110702775876395,
            0.0,
            0.0,
            0.0, //
            0.527357281908146,
            -0.234882275336215,
            0.707524993428070,
            0.0,
            0.0, //
            0.0,
            -0.515140880433405,
            1.515140880433405,
            0.0,
            0.0,
        ],
    );
    GarkTableau::transposed_imex("imex-tr4", &ae, &b, &ai, &b)
}
