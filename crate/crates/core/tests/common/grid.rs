#![allow(dead_code, clippy::excessive_precision)]

// Reference values computed with mpmath at 30 significant digits.
pub const NORMAL_CDF: &[(f64, f64)] = &[
    (-6.0, 9.865876450376981407e-10),
    (-3.5, 0.00023262907903552503635),
    (-1.959964, 0.024999999096442401994),
    (-1.0, 0.15865525393145705141),
    (-0.5, 0.30853753872598689636),
    (0.0, 0.5),
    (0.3, 0.61791142218895263307),
    (1.0, 0.84134474606854294859),
    (1.644854, 0.95000003847458695239),
    (1.959964, 0.97500000090355759801),
    (2.575829, 0.99499999561075918506),
    (4.0, 0.99996832875816688008),
    (8.0, 0.9999999999999993779),
];

// (t, df, two-sided p)
pub const STUDENT_T: &[(f64, f64, f64)] = &[
    (0.5, 1.0, 0.70483276469913345165),
    (2.0, 1.0, 0.29516723530086654835),
    (1.0, 2.0, 0.42264973081037423549),
    (4.242640687, 4.0, 0.013235599564943767201),
    (2.776445, 4.0, 0.050000005382091570825),
    (1.5, 7.0, 0.17729848698997003315),
    (2.5, 10.0, 0.031446844236608804249),
    (3.0, 30.0, 0.0053899640656519466128),
    (0.1, 100.0, 0.92054453109585123216),
    (6.0, 3.0, 0.0092727148922846674041),
    (2.0, 1000.0, 0.045770346493251640049),
];

pub const CHI2_SF: &[(f64, f64, f64)] = &[
    (6.0, 2.0, 0.049787068367863942979),
    (1.0, 1.0, 0.31731050786291410283),
    (3.841459, 1.0, 0.049999994653195766393),
    (7.814728, 3.0, 0.049999997831966144105),
    (0.5, 3.0, 0.91889141165467585936),
    (20.0, 4.0, 0.00049939922738733336689),
    (50.0, 10.0, 2.6690834249044956397e-7),
    (2.0, 5.0, 0.84914503608460963623),
    (100.0, 60.0, 0.00091682886145607987385),
    (0.01, 2.0, 0.99501247919268231325),
];

pub const F_SF: &[(f64, f64, f64, f64)] = &[
    (40.01, 4.0, 458.0, 9.455988611244699717e-29),
    (1.0, 1.0, 1.0, 0.5),
    (3.0, 2.0, 10.0, 0.095367431640625),
    (0.5, 5.0, 20.0, 0.77260438579050489406),
    (2.5, 3.0, 100.0, 0.063832959979086490355),
    (10.0, 1.0, 5.0, 0.025031015818452945537),
];

pub const BETA: &[(f64, f64, f64, f64)] = &[
    (0.3, 2.0, 3.0, 0.34829999999999998042),
    (0.9, 0.5, 0.5, 0.79516723530086657191),
    (0.01, 10.0, 2.0, 1.0900000000000002267e-19),
    (0.5, 50.0, 50.0, 0.5),
    (0.2, 0.1, 5.0, 0.97660049393060111452),
];
