//! Physical parameters of the harvester, their validation, and the derived
//! constants used by the root, dispersion and asymptotic modules.

use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// The twelve constants of the coupled bending-torsion beam with a
/// piezoelectric patch and boundary feedback.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct BeamParameters {
    pub m: f64,
    pub J: f64,
    pub S: f64,
    pub E: f64,
    pub G: f64,
    pub L: f64,
    pub k1: f64,
    pub k2: f64,
    pub Cp: f64,
    pub R: f64,
    pub CD: f64,
    pub CI: f64,
}

/// Keys accepted in a parameter file, in canonical order.
pub const PARAMETER_KEYS: [&str; 12] = [
    "m", "J", "S", "E", "G", "L", "k1", "k2", "Cp", "R", "CD", "CI",
];

impl Default for BeamParameters {
    fn default() -> Self {
        BeamParameters {
            m: 1.0,
            J: 1.0,
            S: 0.3,
            E: 1.0,
            G: 1.0,
            L: 1.0,
            k1: 0.5,
            k2: 2.0,
            Cp: 1.0,
            R: 1.0,
            CD: -0.1,
            CI: 0.1,
        }
    }
}

/// The circuit-side constants, which enter the spectrum only
/// at third order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct PiezoParameters {
    pub Cp: f64,
    pub R: f64,
    pub CD: f64,
    pub CI: f64,
}

impl BeamParameters {
    pub fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "m" => self.m,
            "J" => self.J,
            "S" => self.S,
            "E" => self.E,
            "G" => self.G,
            "L" => self.L,
            "k1" => self.k1,
            "k2" => self.k2,
            "Cp" => self.Cp,
            "R" => self.R,
            "CD" => self.CD,
            "CI" => self.CI,
            _ => return None,
        })
    }

    fn slot(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "m" => &mut self.m,
            "J" => &mut self.J,
            "S" => &mut self.S,
            "E" => &mut self.E,
            "G" => &mut self.G,
            "L" => &mut self.L,
            "k1" => &mut self.k1,
            "k2" => &mut self.k2,
            "Cp" => &mut self.Cp,
            "R" => &mut self.R,
            "CD" => &mut self.CD,
            "CI" => &mut self.CI,
            _ => return None,
        })
    }

    pub fn piezo(&self) -> PiezoParameters {
        PiezoParameters {
            Cp: self.Cp,
            R: self.R,
            CD: self.CD,
            CI: self.CI,
        }
    }

    pub fn with_piezo(&self, piezo: PiezoParameters) -> BeamParameters {
        BeamParameters {
            Cp: piezo.Cp,
            R: piezo.R,
            CD: piezo.CD,
            CI: piezo.CI,
            ..*self
        }
    }

    /// Parses the flat `key = value` format. Every key must appear exactly
    /// once; `#` starts a comment.
    pub fn parse(text: &str) -> Result<BeamParameters> {
        let mut out = BeamParameters::default();
        let mut seen = [false; 12];
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::ParameterFile {
                line: line_no,
                message: format!("expected key=value, found `{line}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            let pos = PARAMETER_KEYS
                .iter()
                .position(|k| *k == key)
                .ok_or_else(|| Error::ParameterFile {
                    line: line_no,
                    message: format!("unknown key `{key}`"),
                })?;
            if seen[pos] {
                return Err(Error::ParameterFile {
                    line: line_no,
                    message: format!("duplicate key `{key}`"),
                });
            }
            let parsed: f64 = value.parse().map_err(|_| Error::ParameterFile {
                line: line_no,
                message: format!("value `{value}` for `{key}` is not a decimal number"),
            })?;
            *out.slot(key).expect("key list and slots agree") = parsed;
            seen[pos] = true;
        }
        if let Some(pos) = seen.iter().position(|s| !s) {
            return Err(Error::MissingKey(PARAMETER_KEYS[pos].to_string()));
        }
        Ok(out)
    }

    pub fn from_file(path: &Path) -> Result<BeamParameters> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        BeamParameters::parse(&text)
    }

    /// Renders the parameter file format; `parse` inverts it exactly.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        for key in PARAMETER_KEYS {
            s.push_str(&format!("{key} = {}\n", self.get(key).unwrap()));
        }
        s
    }
}

impl fmt::Display for BeamParameters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = PARAMETER_KEYS
            .iter()
            .map(|k| format!("{k}={}", self.get(k).unwrap()))
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Optional assumptions that some results need and others do not.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Strictness {
    /// Demand CI = -CD exactly.
    pub require_balanced: bool,
    /// Demand k2 > sqrt(GJ), so that branch 1 exists.
    pub require_branch1: bool,
}

/// Parameters that passed validation, together with D = mJ - S².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidatedParameters {
    raw: BeamParameters,
    d: f64,
}

impl ValidatedParameters {
    pub fn raw(&self) -> &BeamParameters {
        &self.raw
    }

    /// D = mJ - S².
    pub fn d(&self) -> f64 {
        self.d
    }

    /// Location of the circuit pole i/(Cp R).
    pub fn pole(&self) -> Complex64 {
        Complex64::new(0.0, 1.0 / (self.raw.Cp * self.raw.R))
    }

    pub fn is_balanced(&self) -> bool {
        self.raw.CI == -self.raw.CD
    }

    pub fn satisfies_branch1(&self) -> bool {
        self.raw.k2 > (self.raw.G * self.raw.J).sqrt()
    }
}

pub fn validate_parameters(raw: BeamParameters, flags: Strictness) -> Result<ValidatedParameters> {
    for key in PARAMETER_KEYS {
        if !raw.get(key).unwrap().is_finite() {
            return Err(Error::NonFinite { name: key });
        }
    }
    let positive: [(&'static str, f64); 10] = [
        ("m", raw.m),
        ("J", raw.J),
        ("E", raw.E),
        ("G", raw.G),
        ("L", raw.L),
        ("k1", raw.k1),
        ("k2", raw.k2),
        ("Cp", raw.Cp),
        ("R", raw.R),
        ("CI", raw.CI),
    ];
    for (name, value) in positive {
        if value <= 0.0 {
            return Err(Error::NonPositiveParameter { name, value });
        }
    }
    if raw.S < 0.0 {
        return Err(Error::WrongSign { name: "S", value: raw.S });
    }
    if raw.CD >= 0.0 {
        return Err(Error::WrongSign { name: "CD", value: raw.CD });
    }
    let limit = raw.m.min(raw.J);
    if raw.S >= limit {
        return Err(Error::CouplingTooStrong { s: raw.S, limit });
    }
    let d = raw.m * raw.J - raw.S * raw.S;
    debug_assert!(d > 0.0);
    if flags.require_balanced && raw.CI != -raw.CD {
        return Err(Error::BalancedPiezoViolated { ci: raw.CI, cd: raw.CD });
    }
    let sqrt_gj = (raw.G * raw.J).sqrt();
    if flags.require_branch1 && raw.k2 <= sqrt_gj {
        return Err(Error::Branch1ConditionViolated { k2: raw.k2, sqrt_gj });
    }
    Ok(ValidatedParameters { raw, d })
}

/// Shape constants of the characteristic polynomial and the coefficients of
/// the large-λ root expansions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct DerivedConstants {
    pub D: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

pub fn derive_constants(p: &ValidatedParameters) -> DerivedConstants {
    let r = p.raw;
    let d = p.d;
    let a1 = (r.J / r.G).sqrt();
    let a2 = r.G.powf(1.5) * r.S * r.S / (2.0 * r.E * r.J.powf(2.5));
    let a3 = (d / (r.E * r.J)).powf(0.25);
    let a4 = r.G * r.S * r.S / (4.0 * r.E.powf(0.75) * r.J.powf(1.75) * d.powf(0.25));
    DerivedConstants {
        D: d,
        alpha: r.J / r.G,
        beta: r.m / r.E,
        gamma: d / (r.E * r.G),
        a1,
        a2,
        a3,
        a4,
        c1: a1 * r.L,
        c2: a2 * r.L,
        c3: a3 * r.L,
        c4: a4 * r.L,
    }
}

/// The d- and r-constants appearing in the large-λ expansion of the
/// reflection matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryConstants {
    pub d1: Complex64,
    pub dhat2: Complex64,
    pub d2: Complex64,
    pub r11: Complex64,
    pub rhat11: Complex64,
    pub rtilde11: Complex64,
    pub r12: Complex64,
    pub rhat12: Complex64,
    pub rhat13: Complex64,
    pub r21: Complex64,
    pub r22: Complex64,
    pub rhat22: Complex64,
    pub r23: Complex64,
}

impl BoundaryConstants {
    /// The ten constants that must not depend on the circuit, in a fixed
    /// order, for bitwise comparisons.
    pub fn piezo_free(&self) -> [Complex64; 10] {
        [
            self.r11, self.rhat11, self.r12, self.rhat12, self.rhat13, self.r21, self.r22,
            self.rhat22, self.r23, self.d1,
        ]
    }
}

pub fn boundary_constants(p: &ValidatedParameters, d: &DerivedConstants) -> Result<BoundaryConstants> {
    let r = p.raw;
    let (e, g, m, k1, k2) = (r.E, r.G, r.m, r.k1, r.k2);
    let (a1, a3) = (d.a1, d.a3);
    let ga = g * a1 + k2;
    if ga == 0.0 || !ga.is_finite() {
        return Err(Error::DegenerateDenominator("G a1 + k2"));
    }
    // E a3^4 - m, which equals -S²/J.
    let x = e * a3.powi(4) - m;
    let one_m_i = Complex64::new(1.0, -1.0);
    let i_m_one = Complex64::new(-1.0, 1.0);
    let piezo = r.CI * r.CD / r.Cp;

    let d1 = one_m_i * (e * a3 / (2.0 * k1)) + i_m_one * (k2 * x / (2.0 * e * a1 * a3.powi(3) * ga));
    let dhat2 = I * (piezo / k1) + I * (k2 * x / (k1 * a1 * a3 * a3 * ga));
    let d2 = d1 * d1 - dhat2;

    let num = e * e * a1 * a3.powi(4) * ga;
    let r22_den = num - k1 * k2 * x;
    if r22_den == 0.0 || !r22_den.is_finite() {
        return Err(Error::DegenerateDenominator("r22"));
    }
    let scale = e * k1 * a1 * a3.powi(3) * ga;

    Ok(BoundaryConstants {
        d1,
        dhat2,
        d2,
        r11: Complex64::from(2.0 * k2 / ga),
        rhat11: one_m_i * (e * a3 / (2.0 * k1)) - d1,
        rtilde11: I * (piezo / k1) - one_m_i * (e * a3 / (2.0 * k1)) * d1 + d2,
        r12: Complex64::from(-2.0 * k2 * x / (e * a1.powi(4) * ga)),
        rhat12: I * (e * a3 / k1) + d1,
        rhat13: Complex64::from(e * a3 / k1) - d1,
        r21: Complex64::from(k2 * a1.powi(3) / (a3.powi(3) * ga)),
        r22: Complex64::from(r22_den / scale),
        rhat22: I * (2.0 * e * k2 * a3 * x / r22_den),
        r23: Complex64::from((num + k1 * k2 * x) / scale),
    })
}

/// Validated parameters bundled with all derived quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model {
    pub params: ValidatedParameters,
    pub derived: DerivedConstants,
    pub boundary: BoundaryConstants,
}

impl Model {
    pub fn new(raw: BeamParameters, flags: Strictness) -> Result<Model> {
        let params = validate_parameters(raw, flags)?;
        Model::from_validated(params)
    }

    pub fn from_validated(params: ValidatedParameters) -> Result<Model> {
        let derived = derive_constants(&params);
        let boundary = boundary_constants(&params, &derived)?;
        Ok(Model { params, derived, boundary })
    }

    pub fn raw(&self) -> &BeamParameters {
        self.params.raw()
    }

    /// Same structural parameters with a different circuit.
    pub fn with_piezo(&self, piezo: PiezoParameters) -> Result<Model> {
        Model::new(self.raw().with_piezo(piezo), Strictness::default())
    }
}
