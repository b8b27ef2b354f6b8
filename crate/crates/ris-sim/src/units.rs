//! Power and ratio unit conversions (dB, dBm, watts).
//!
//! Everything downstream works in linear watts internally; dB/dBm appear only
//! at configuration boundaries and in reports, so the conversions live in one
//! place.

/// Converts a power in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Converts a power in watts to dBm.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts * 1000.0).log10()
}

/// Converts a dB ratio to a linear ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear ratio to dB.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_watts_round_trip() {
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-12);
        assert!((dbm_to_watts(-65.0) - 3.1622776601683795e-10).abs() < 1e-22);
        assert!((watts_to_dbm(1.0) - 30.0).abs() < 1e-12);
        for dbm in [-65.0, 0.0, 30.0, 46.5, 80.0] {
            assert!((watts_to_dbm(dbm_to_watts(dbm)) - dbm).abs() < 1e-9);
        }
    }

    #[test]
    fn db_linear_round_trip() {
        assert!((db_to_linear(0.0) - 1.0).abs() < 1e-15);
        assert!((db_to_linear(10.0) - 10.0).abs() < 1e-12);
        assert!((linear_to_db(100.0) - 20.0).abs() < 1e-12);
        for db in [-33.0, -3.01, 0.0, 7.7, 60.0] {
            assert!((linear_to_db(db_to_linear(db)) - db).abs() < 1e-9);
        }
    }
}
