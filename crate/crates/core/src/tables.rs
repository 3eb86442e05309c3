//! Published parameter sets for the five standard test sequences.
//!
//! Rate parameters are listed per coding scenario. All sets use the
//! standard reference resolutions (`q_min` 16, `s_max` 4CIF, `t_max` 30 Hz).

use crate::model::{QrModel, QualityParams, RateParams, ResolutionRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sequence {
    City,
    Crew,
    Harbour,
    Ice,
    Soccer,
}

impl Sequence {
    pub const ALL: [Sequence; 5] = [
        Sequence::City,
        Sequence::Crew,
        Sequence::Harbour,
        Sequence::Ice,
        Sequence::Soccer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Sequence::City => "city",
            Sequence::Crew => "crew",
            Sequence::Harbour => "harbour",
            Sequence::Ice => "ice",
            Sequence::Soccer => "soccer",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|s| s.name().eq_ignore_ascii_case(name.trim()))
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Coding scenarios with published rate parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// Joint spatial/temporal scalability, no QP cascading.
    Svc1,
    /// Temporal and spatial QP cascading, spatial delta QP 4.
    Svc2,
    /// Temporal and spatial QP cascading, spatial delta QP 6, GOP 8.
    Svc3,
    /// Combined spatial, temporal and amplitude scalability.
    Svc4,
    /// Single layer, IPPP.
    Sl1,
    /// Single layer, hierarchical B with temporal QP cascading.
    Sl2,
    /// Single layer, hierarchical B with temporal and spatial QP cascading.
    Sl3,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::Svc1,
        Scenario::Svc2,
        Scenario::Svc3,
        Scenario::Svc4,
        Scenario::Sl1,
        Scenario::Sl2,
        Scenario::Sl3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Svc1 => "SVC#1",
            Scenario::Svc2 => "SVC#2",
            Scenario::Svc3 => "SVC#3",
            Scenario::Svc4 => "SVC#4",
            Scenario::Sl1 => "SL#1",
            Scenario::Sl2 => "SL#2",
            Scenario::Sl3 => "SL#3",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        let key: String = name
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        Self::ALL.into_iter().find(|s| {
            s.name()
                .chars()
                .filter(|c| c.is_ascii_alphanumeric())
                .map(|c| c.to_ascii_lowercase())
                .collect::<String>()
                == key
        })
    }

    /// Rows a, b, c, r_max; columns city, crew, harbour, ice, soccer.
    fn table(self) -> &'static [[f64; 5]; 4] {
        match self {
            Scenario::Svc1 => &SVC1,
            Scenario::Svc2 => &SVC2,
            Scenario::Svc3 => &SVC3,
            Scenario::Svc4 => &SVC4,
            Scenario::Sl1 => &SL1,
            Scenario::Sl2 => &SL2,
            Scenario::Sl3 => &SL3,
        }
    }
}

const SVC1: [[f64; 5]; 4] = [
    [1.394, 1.139, 1.373, 0.936, 1.152],
    [0.547, 0.702, 0.640, 0.628, 0.635],
    [1.114, 0.830, 0.952, 0.736, 0.899],
    [2379.0, 3516.0, 6145.0, 1594.0, 3242.0],
];

const SVC2: [[f64; 5]; 4] = [
    [1.342, 1.20, 1.171, 0.952, 1.092],
    [0.329, 0.538, 0.508, 0.496, 0.454],
    [0.806, 0.533, 0.646, 0.537, 0.642],
    [3625.0, 4960.0, 8675.0, 2334.0, 4554.0],
];

const SVC3: [[f64; 5]; 4] = [
    [1.239, 1.092, 1.363, 0.953, 1.15],
    [0.268, 0.459, 0.288, 0.447, 0.425],
    [0.512, 0.319, 0.427, 0.371, 0.411],
    [761.0, 1169.0, 1953.0, 761.0, 1200.0],
];

const SVC4: [[f64; 5]; 4] = [
    [0.881, 0.69, 0.768, 0.647, 0.771],
    [0.254, 0.536, 0.471, 0.486, 0.441],
    [0.902, 0.605, 0.808, 0.669, 0.799],
    [1816.0, 2909.0, 4556.0, 1518.0, 2588.0],
];

const SL1: [[f64; 5]; 4] = [
    [1.935, 1.362, 1.23, 1.12, 1.38],
    [0.836, 0.828, 0.795, 0.679, 0.711],
    [1.301, 0.881, 0.895, 0.729, 0.992],
    [7561.0, 6962.0, 10884.0, 2140.0, 6084.0],
];

const SL2: [[f64; 5]; 4] = [
    [1.371, 1.095, 1.248, 0.86, 1.086],
    [0.233, 0.471, 0.397, 0.438, 0.39],
    [1.047, 0.785, 0.894, 0.667, 0.88],
    [1512.0, 2429.0, 3818.0, 975.0, 2268.0],
];

const SL3: [[f64; 5]; 4] = [
    [1.333, 1.054, 1.149, 0.851, 1.037],
    [0.242, 0.491, 0.422, 0.454, 0.403],
    [0.479, 0.266, 0.361, 0.239, 0.40],
    [1965.0, 2969.0, 4909.0, 1125.0, 2736.0],
];

/// alpha_q, alpha_s_tilde, alpha_t per sequence.
const QUALITY: [[f64; 3]; 5] = [
    [7.25, 3.52, 4.10],
    [4.51, 4.07, 3.09],
    [9.65, 4.58, 2.83],
    [5.61, 3.68, 3.00],
    [6.31, 4.55, 2.23],
];

/// kappa and reported fit RMSE of the best-quality-versus-rate curve.
const QR: [(f64, f64); 5] = [
    (5.058, 0.0049),
    (3.121, 0.0013),
    (5.882, 0.0043),
    (2.769, 0.013),
    (4.103, 0.0079),
];

pub fn rate_params(scenario: Scenario, seq: Sequence) -> RateParams {
    let t = scenario.table();
    let i = seq.index();
    RateParams {
        a: t[0][i],
        b: t[1][i],
        c: t[2][i],
        r_max: t[3][i],
        reference: ResolutionRef::standard(),
    }
}

pub fn quality_params(seq: Sequence) -> QualityParams {
    let [aq, as_, at] = QUALITY[seq.index()];
    QualityParams::new(aq, as_, at, ResolutionRef::standard())
        .expect("published quality parameters are valid")
}

/// Published Q(R) model for a sequence under the SVC#1 rate parameters.
pub fn qr_model(seq: Sequence) -> QrModel {
    let r_max = rate_params(Scenario::Svc1, seq).r_max;
    QrModel::new(QR[seq.index()].0, r_max).expect("published kappa is valid")
}

pub fn qr_reported_rmse(seq: Sequence) -> f64 {
    QR[seq.index()].1
}
