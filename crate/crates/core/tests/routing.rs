mod common;

use tlquant::netlist::{rescale, CircuitSpec, LineLength};
use tlquant::nrcore::{NrElement, NrTolerances};
use tlquant::tdsim::{gaussian_energy, init_state, Direction, FarEnd, InitialData, Pulse, SimConfig};

#[test]
fn circulator_routes_each_port_to_the_next() {
    let mut spec = CircuitSpec::uniform(3, LineLength::Finite(8.0), 1.0, 1.0);
    let s = nalgebra::DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    spec.nr_element = Some(NrElement::from_scattering(s, 1.0, &NrTolerances::default()).unwrap());
    let spec = rescale(&spec);
    assert_eq!(spec.y.as_ref().unwrap(), &common::circulator_y());
    for k in 0..3 {
        let pulse = Pulse { line: k, center: 4.0, width: 0.5, amplitude: 1.0, direction: Direction::Left };
        let cfg = SimConfig { cells: 512, far_end: FarEnd::Absorbing, ..Default::default() };
        let mut st = init_state(&spec, &cfg, &InitialData::Pulses(vec![pulse])).unwrap();
        let e0 = st.energy();
        assert!((e0 - gaussian_energy(&pulse, 1.0)).abs() / e0 < 1e-3);
        st.run((6.0 / st.dt).round() as usize).unwrap();
        let next = (k + 1) % 3;
        let transmitted = st.window_energy(next, 0.0, 8.0) / e0;
        let back = st.window_energy(k, 0.0, 8.0) / e0;
        assert!(transmitted > 0.999, "port {k}: transmitted {transmitted}");
        assert!(back < 1e-4, "port {k}: back-reflected {back}");
    }
}
