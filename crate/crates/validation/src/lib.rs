//! Published reference values checked by the acceptance gate.
//!
//! Values are kept as printed, including their original rounding, so the
//! gate can compare against the exact strings.

/// Published synthetic/actual pairs: per owner, (SD, AD) for four attributes
/// and the class label.
pub const TABLE: [([(&str, &str); 4], u32); 20] = [
    ([("4.9144", "4.2575"), ("7.8223", "7.1754"), ("-1.1116", "-1.7685"), ("-2.0329", "-2.6898")], 0),
    ([("1.5551", "0.7536"), ("1.7152", "0.9137"), ("6.9125", "6.1110"), ("-3.2502", "-4.0517")], 0),
    ([("1.3112", "1.0978"), ("-2.6567", "-2.8701"), ("2.8156", "2.6022"), ("-1.8123", "-2.0257")], 0),
    ([("2.9124", "2.1312"), ("-2.3231", "-3.1043"), ("3.4122", "2.631"), ("-2.9158", "-3.6970")], 1),
    ([("5.1451", "4.9639"), ("3.4256", "3.2444"), ("-1.6823", "-1.8635"), ("1.2151", "1.0339")], 1),
    ([("1.0132", "0.7983"), ("5.7588", "5.5439"), ("0.4724", "0.2575"), ("-0.6125", "-0.8274")], 0),
    ([("2.5156", "1.9033"), ("9.1772", "8.5649"), ("-0.7336", "-1.3459"), ("-0.7353", "-1.3476")], 0),
    ([("4.4157", "4.2046"), ("8.7779", "8.5668"), ("-4.4035", "-4.6146"), ("-0.8064", "-1.0175")], 0),
    ([("1.9877", "1.6659"), ("1.1038", "0.7820"), ("2.3946", "2.0728"), ("0.8629", "0.5411")], 1),
    ([("2.9935", "2.5039"), ("7.6625", "7.1729"), ("0.1539", "-0.3357"), ("-1.0175", "-1.5071")], 1),
    ([("-2.6128", "-2.9317"), ("10.8430", "10.5241"), ("2.5462", "2.2273"), ("-2.7926", "-3.1115")], 0),
    ([("2.4121", "2.012"), ("8.7261", "8.3260"), ("-3.0030", "-3.4031"), ("-0.5724", "-0.9725")], 0),
    ([("3.6651", "2.7939"), ("-3.3924", "-4.2636"), ("3.4896", "2.6184"), ("1.4771", "0.6059")], 0),
    ([("1.7219", "1.5800"), ("3.0646", "2.927"), ("0.8747", "0.7328"), ("0.5861", "0.4442")], 1),
    ([("1.4512", "1.2401"), ("2.8473", "2.6362"), ("4.3439", "4.1328"), ("1.6524", "1.4413")], 1),
    ([("2.7159", "2.5497"), ("-4.0257", "-4.1919"), ("8.3428", "8.1766"), ("-2.1086", "-2.2748")], 0),
    ([("3.2153", "2.7866"), ("11.0272", "10.5985"), ("-2.3564", "-2.7851"), ("-2.1113", "-2.5400")], 0),
    ([("1.7121", "1.5903"), ("7.8902", "7.7684"), ("-1.3663", "-1.4881"), ("-1.5650", "-1.6868")], 0),
    ([("1.2192", "0.9812"), ("-1.1117", "-1.3496"), ("2.7118", "2.4739"), ("-1.4445", "-1.6824")], 1),
    ([("6.9081", "6.2122"), ("8.3511", "7.6552"), ("-1.7556", "-2.4515"), ("-0.7492", "-1.4451")], 1),
];

/// Owner index and published noise.
pub const PUBLISHED_NOISE: [(usize, f64); 3] = [(0, 0.6569), (1, 0.8015), (19, 0.6959)];
