//! Path loss, noise and fading draws of the macro-cell channel model, and a
//! round trip through the replay CSV format.

use mcnoma::channel::{
    hata_path_loss_db, noise_power_dbm, read_replay_csv, write_replay_csv, ChannelGenerator, FadingConfig,
    UserPlacement,
};
use mcnoma::config::RunConfig;

fn main() -> mcnoma::Result<()> {
    let fading = FadingConfig::default();
    for d in [30.0, 100.0, 300.0] {
        println!("path loss at {d:>5} m: {:.2} dB", hata_path_loss_db(d / 1000.0, &fading)?);
    }
    let config = RunConfig::default().system_config()?;
    println!("noise per subchannel: {:.2} dBm", noise_power_dbm(&fading, config.subchannel_bandwidth_hz[0]));

    let mut gen = ChannelGenerator::new(&config, &fading, UserPlacement::linear(config.n_users, 30.0))?;
    let snaps = (0..3).map(|_| gen.next_snapshot()).collect::<mcnoma::Result<Vec<_>>>()?;
    for (t, s) in snaps.iter().enumerate() {
        let row = s.ncr_row(0);
        println!("slot {t}: NCR on subchannel 0, nearest {:.3e} W, farthest {:.3e} W", row[0], row[row.len() - 1]);
    }

    let mut buf = Vec::new();
    write_replay_csv(&mut buf, &snaps)?;
    let back = read_replay_csv(buf.as_slice())?;
    println!("replay CSV: {} bytes, {} slots read back identical: {}", buf.len(), back.len(), back == snaps);
    Ok(())
}
