//! Embedded analysis lowpass tables.
//!
//! Highpass filters are derived from these with the quadrature-mirror
//! relation `hp[k] = (-1)^k * lp[F - 1 - k]`.

/// Daubechies 4 (8 taps), decomposition lowpass.
pub(crate) const DB4_LP: [f64; 8] = [
    -0.010597401785069032,
    0.0328830116668852,
    0.030841381835560764,
    -0.18703481171909309,
    -0.027983769416859854,
    0.6308807679298589,
    0.7148465705529157,
    0.2303778133088965,
];

/// Discrete Meyer, 62 taps.
///
/// The widely distributed 62-tap `dmey` table is a truncation of the Meyer
/// scaling filter and misses orthonormality by about 1e-3 (`‖lp‖₂ - 1` and
/// the alternating sum). This table is that filter projected onto the set of
/// exactly orthonormal 62-tap filters: the double-shift autocorrelation is
/// `δ` and `Σ(-1)^k lp[k] = 0` to double precision, and no tap moves by more
/// than 8.1e-4 from the distributed values.
pub(crate) const DMEY_LP: [f64; 62] = [
    8.514554482969786e-07,
    -8.692877355063792e-07,
    -1.0416565645408625e-05,
    1.101184412924367e-05,
    1.4317556438976722e-05,
    -1.6138604891831933e-05,
    -2.8247668477654008e-05,
    2.704153801788386e-06,
    -3.662060131846085e-05,
    -3.902376937970109e-06,
    8.131960738102301e-05,
    5.2174236233677245e-05,
    -0.0002203057883854075,
    -7.069118725743635e-05,
    0.00025171739854619045,
    0.0006255796917729145,
    -0.0003285756182183309,
    -0.0027479969870130463,
    0.0020771905837454548,
    0.006119729949018193,
    -0.006344327936830571,
    -0.011069663322927182,
    0.015194618816425913,
    0.01745668065347191,
    -0.03209508419134043,
    -0.024319322746599897,
    0.0636329614389054,
    0.03065516717805425,
    -0.13271228619964726,
    -0.03503315453311251,
    0.4440705465597784,
    0.7437778157717984,
    0.44407053602119756,
    -0.03503313519844758,
    -0.13271224290150105,
    0.03065510947568928,
    0.06363295976739185,
    -0.02431941848128625,
    -0.03209549395131216,
    0.017457165978480623,
    0.0151943858380628,
    -0.01106945516740963,
    -0.006345451518855356,
    0.006117814136217594,
    0.00207188877018942,
    -0.002752957625746317,
    -0.0003381387189890988,
    0.000621090841430396,
    0.00024187385870508835,
    -6.791955532880562e-05,
    -0.00020859324539862343,
    2.030460237456989e-05,
    3.9805129788647856e-05,
    2.9266664280115538e-05,
    -6.333618211079352e-06,
    -1.0222948473679586e-05,
    2.1373083065867925e-05,
    2.6202879200154213e-05,
    -1.0045623125173347e-05,
    -8.734970725294797e-06,
    2.5994487327149426e-06,
    2.5461244874396923e-06,
];

/// The distributed 62-tap table, kept for comparison in tests.
#[cfg(test)]
pub(crate) const DMEY_PUBLISHED_LP: [f64; 62] = [
    0.0,
    -1.009999956941423e-12,
    8.519459636796214e-09,
    -1.111944952595278e-08,
    -1.0798819539621958e-08,
    6.066975741351135e-08,
    -1.0866516536735883e-07,
    8.200680650386481e-08,
    1.1783004497663934e-07,
    -5.506340565252278e-07,
    1.1307947017916706e-06,
    -1.489549216497156e-06,
    7.367572885903746e-07,
    3.20544191334478e-06,
    -1.6312699734552807e-05,
    6.554305930575149e-05,
    -0.0006011502343516092,
    -0.002704672124643725,
    0.002202534100911002,
    0.006045814097323304,
    -0.006387718318497156,
    -0.011061496392513451,
    0.015270015130934803,
    0.017423434103729693,
    -0.03213079399021176,
    -0.024348745906078023,
    0.0637390243228016,
    0.030655091960824263,
    -0.13284520043622938,
    -0.035087555656258346,
    0.44459300275757724,
    0.7445855923188063,
    0.44459300275757724,
    -0.035087555656258346,
    -0.13284520043622938,
    0.030655091960824263,
    0.0637390243228016,
    -0.024348745906078023,
    -0.03213079399021176,
    0.017423434103729693,
    0.015270015130934803,
    -0.011061496392513451,
    -0.006387718318497156,
    0.006045814097323304,
    0.002202534100911002,
    -0.002704672124643725,
    -0.0006011502343516092,
    6.554305930575149e-05,
    -1.6312699734552807e-05,
    3.20544191334478e-06,
    7.367572885903746e-07,
    -1.489549216497156e-06,
    1.1307947017916706e-06,
    -5.506340565252278e-07,
    1.1783004497663934e-07,
    8.200680650386481e-08,
    -1.0866516536735883e-07,
    6.066975741351135e-08,
    -1.0798819539621958e-08,
    -1.111944952595278e-08,
    8.519459636796214e-09,
    -1.009999956941423e-12,
];
