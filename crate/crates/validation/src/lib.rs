//! Published reference values, frozen as printed, for regression checks.

use ulb_core::liftedulb::Label;
use ulb_core::Real;

/// Row of the small-dimension comparison table.
#[derive(Clone, Copy, Debug)]
pub struct Table5Row {
    pub n: usize,
    pub card: usize,
    pub tau: usize,
    pub alpha: Real,
    pub ulb1: Real,
    /// (beta_{k+1}, ULB2, L_tau(n, beta_{k+1})); None for blank cells.
    pub second: Option<(Real, Real, Real)>,
    /// Label implied by the row marks.
    pub label: Label,
    /// Best known maximal inner product and Newton energy.
    pub s_best: Real,
    pub energy_best: Real,
    /// Signs of the first-level Q_{tau+3}, Q_{tau+4}; None where not printed.
    pub signs: Option<[i8; 2]>,
}

const fn row(
    n: usize,
    card: usize,
    tau: usize,
    alpha: Real,
    ulb1: Real,
    second: Option<(Real, Real, Real)>,
    label: Label,
    best: (Real, Real),
    signs: Option<[i8; 2]>,
) -> Table5Row {
    Table5Row {
        n,
        card,
        tau,
        alpha,
        ulb1,
        second,
        label,
        s_best: best.0,
        energy_best: best.1,
        signs,
    }
}

use Label::*;
const M: i8 = -1;
const P: i8 = 1;

pub const TABLE5: [Table5Row; 37] = [
    row(3, 12, 5, 0.44721, 98.33050, None, Ulb1Lp, (0.44721, 98.33050), None),
    row(3, 13, 5, 0.48937, 117.50227, Some((0.49320, 117.52252, 13.10104)), Ulb2, (0.61129, 117.70646), Some([M, P])),
    row(3, 14, 5, 0.52401, 138.43302, Some((0.52767, 138.45874, 14.11861)), Ulb2, (0.60367, 138.61272), Some([M, M])),
    row(3, 15, 5, 0.55223, 161.12063, None, NoUlb2, (0.65309, 161.34048), Some([P, M])),
    row(3, 16, 6, 0.57531, 185.56365, Some((0.57655, 185.57396, 16.04667)), Ulb2, (0.65689, 185.82331), Some([M, P])),
    row(3, 17, 6, 0.60000, 211.85442, Some((0.60253, 211.88210, 17.11170)), Ulb2, (0.64134, 212.10080), Some([M, P])),
    row(3, 18, 6, 0.62115, 239.93234, Some((0.62358, 239.96600, 18.12579)), Ulb2, (0.67514, 240.16893), Some([M, M])),
    row(3, 19, 6, 0.63921, 269.79600, Some((0.64099, 269.82637, 19.10762)), Ulb2, (0.70822, 270.17893), Some([M, M])),
    row(3, 20, 7, 0.65465, 301.44437, None, NoUlb2, (0.69348, 301.76313), Some([M, P])),
    row(4, 14, 4, 0.27429, 98.00000, None, NoUlb2, (0.33921, 98.52459), Some([M, P])),
    row(4, 15, 4, 0.30620, 114.95833, Some((0.30901, 115.00000, 15.09646)), Ulb2Lp, (0.35355, 115.23320), Some([M, P])),
    row(4, 16, 4, 0.33333, 133.33333, Some((0.33668, 133.39481, 16.13540)), Ulb2Lp, (0.43652, 133.89967), Some([M, P])),
    row(4, 17, 4, 0.35645, 153.12500, Some((0.35921, 153.18839, 17.13061)), Ulb2, (0.47650, 153.96222), Some([M, P])),
    row(4, 18, 4, 0.37627, 174.33333, Some((0.37792, 174.38060, 18.09042)), Ulb2, (0.48480, 175.23235), Some([M, P])),
    row(4, 19, 4, 0.39337, 196.95833, None, NoUlb2, (0.48797, 197.90580), Some([M, P])),
    row(4, 20, 5, 0.40824, 221.00000, None, Ulb1Lp, (0.44168, 221.59853), None),
    row(4, 21, 5, 0.42720, 246.75000, Some((0.42895, 246.80226, 21.09675)), Ulb2Lp, (0.52049, 247.47325), Some([M, P])),
    row(4, 22, 5, 0.44461, 274.00000, Some((0.44767, 274.10417, 22.18545)), Ulb2Lp, (0.54446, 275.03231), Some([M, P])),
    row(4, 23, 5, 0.46050, 302.75000, Some((0.46399, 302.88662, 23.23343)), Ulb2Lp, (0.57524, 304.08398), Some([M, P])),
    row(4, 24, 5, 0.47495, 333.00000, Some((0.47854, 333.15757, 24.26443)), Ulb2Lp, (0.50000, 334.00000), Some([M, M])),
    row(4, 25, 5, 0.48807, 364.75000, None, NoUlb2, (0.60167, 365.97676), Some([M, M])),
    row(4, 26, 5, 0.50000, 398.00000, None, NoUlb2, (0.56449, 399.38498), Some([P, M])),
    row(4, 27, 5, 0.51084, 432.75000, None, NoUlb2, (0.64815, 434.30824), Some([P, M])),
    row(4, 28, 5, 0.52072, 469.00000, None, NoUlb2, (0.64237, 470.79842), Some([P, M])),
    row(4, 29, 5, 0.52973, 506.75000, None, NoUlb2, (0.62694, 508.75066), Some([P, M])),
    row(4, 30, 6, 0.53798, 546.00000, Some((0.53982, 546.12516, 30.18048)), Ulb2, (0.63014, 548.37233), Some([M, P])),
    row(5, 30, 5, 0.37796, 398.22942, None, Ulb1Lp, (0.41665, 400.57973), None),
    row(5, 31, 5, 0.38810, 429.26411, None, NoUlb2, (0.49636, 431.73992), Some([M, P])),
    row(5, 32, 5, 0.39779, 461.55489, Some((0.39870, 461.65839, 32.09565)), Ulb2Lp, (0.44721, 463.22759), Some([M, P])),
    row(5, 33, 5, 0.40702, 495.10289, Some((0.40860, 495.29351, 33.17595)), Ulb2Lp, (0.52494, 498.25726), Some([M, P])),
    row(5, 34, 5, 0.41580, 529.90910, Some((0.41781, 530.17012, 34.23704)), Ulb2Lp, (0.55380, 533.83563), Some([M, P])),
    row(5, 35, 5, 0.42413, 565.97439, Some((0.42637, 566.28683, 35.27872)), Ulb2Lp, (0.57230, 570.72828), Some([M, P])),
    row(5, 36, 5, 0.43202, 603.29953, Some((0.43436, 603.64803, 36.30722)), Ulb2Lp, (0.51722, 607.97487), Some([M, M])),
    row(5, 37, 5, 0.43950, 641.88518, Some((0.44196, 642.26961, 37.34082)), Ulb2Lp, (0.57729, 647.27793), Some([M, M])),
    row(5, 38, 5, 0.44659, 681.73194, None, NoUlb2, (0.56512, 687.15114), Some([M, M])),
    row(5, 39, 5, 0.45330, 722.84035, None, NoUlb2, (0.58602, 728.31676), Some([P, M])),
    row(5, 40, 5, 0.45965, 765.21089, None, NoUlb2, (0.56248, 769.75044), Some([P, M])),
];

/// Published label runs (tau, label, lo, hi) for the n = 8 and n = 9 scans.
pub fn published_runs(n: usize) -> Vec<(usize, Label, usize, usize)> {
    match n {
        8 => vec![
            (5, Ulb1Lp, 72, 79),
            (5, NoUlb2, 80, 90),
            (5, Ulb1Lp, 91, 102),
            (5, NoUlb2, 103, 155),
            (6, NoUlb2, 156, 167),
            (6, Ulb2Lp, 168, 239),
            (7, Ulb1Lp, 240, 240),
            (7, Ulb2Lp, 241, 316),
            (7, NoUlb2, 317, 449),
            (8, Ulb2Lp, 450, 532),
            (8, Ulb2, 533, 625),
            (8, NoUlb2, 626, 659),
        ],
        9 => vec![
            (5, Ulb1Lp, 90, 141),
            (5, NoUlb2, 142, 209),
            (6, NoUlb2, 210, 232),
            (6, Ulb2Lp, 233, 284),
            (6, NoUlb2, 285, 329),
            (7, Ulb1Lp, 330, 332),
            (7, NoUlb2, 333, 338),
            (7, Ulb2Lp, 339, 439),
            (7, NoUlb2, 440, 659),
            (8, Ulb2Lp, 660, 850),
            (8, Ulb2, 851, 929),
            (8, NoUlb2, 930, 989),
        ],
        _ => Vec::new(),
    }
}

/// Scan range [lo, hi] covered by the published runs.
pub fn published_range(n: usize) -> Option<(usize, usize)> {
    let r = published_runs(n);
    Some((r.first()?.2, r.last()?.3))
}
