use std::time::Instant;
use wavepacket_core::*;
fn main() {
    let packet = GaussianPacket::isotropic_diagonal(
        7.016003,
        RealVec::new2(-300.0, 0.0),
        RealVec::new2(4.0, 0.0),
        &[0.01, 0.005],
    ).unwrap();
    let grid = Grid2D::new(1024, 512, -600.0, 600.0, -300.0, 300.0).unwrap();
    let t0 = Instant::now();
    let mut field = WaveField::from_packet(&packet, &grid, 150.0).unwrap();
    println!("init: {:?}", t0.elapsed());
    let ridge = RidgeParams::from_ev(1e-14, 20.0).unwrap();
    let mut prop = SplitStepPropagator::new(&grid, &ridge, packet.mass(), 0.05).unwrap();
    prop.check_time_step(&packet).unwrap();
    let t0 = Instant::now();
    prop.run(&mut field, 50).unwrap();
    println!("50 steps: {:?} ({:?}/step)", t0.elapsed(), t0.elapsed() / 50);
    let t0 = Instant::now();
    let rec = prop.measure(&field);
    println!("measure: {:?}  norm {}  mam_int {}", t0.elapsed(), rec.norm, rec.mam_internal3);
}
