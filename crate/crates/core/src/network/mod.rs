//! Linear (pump-off) network model of the line.

mod abcd;
mod cell;
mod spectrum;
mod touchstone;

pub use abcd::{abcd_to_s, SMatrix, TwoPortABCD, C64};
pub use cell::{
    bloch_impedance, bloch_wavenumber, cascade, cell_abcd, series_impedance, shunt_admittance,
    DispersionPoint,
};
pub use spectrum::{
    ensemble_transmission, linear_grid, stopband_from_transmission, stopband_width,
    transmission_spectrum, SpectrumPoint, Stopband,
};
pub use touchstone::{
    cascade_networks, parse_touchstone, read_touchstone, resample, serialize_touchstone,
    spectrum_csv_row, DataFormat, FrequencyUnit, TouchstoneNetwork, SPECTRUM_CSV_HEADER,
};
