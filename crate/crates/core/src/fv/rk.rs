use super::FvError;

/// One TVDRK3 step `z -> z + dt L(z)` in Shu-Osher form.
pub fn tvdrk3_step<F>(z: &[f64], dt: f64, mut rhs: F) -> Result<Vec<f64>, FvError>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>, FvError>,
{
    let check = |v: &[f64], stage: usize| {
        if v.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(FvError::NonFinite { stage })
        }
    };
    let r0 = rhs(z)?;
    let z1: Vec<f64> = z.iter().zip(&r0).map(|(a, r)| a + r * dt).collect();
    check(&z1, 1)?;
    let r1 = rhs(&z1)?;
    let c1 = 0.25 * dt;
    let z2: Vec<f64> = z.iter().zip(&z1).zip(&r1).map(|((a, b), r)| (a * 0.75 + b * 0.25) + r * c1).collect();
    check(&z2, 2)?;
    let r2 = rhs(&z2)?;
    let c2 = (2.0 / 3.0) * dt;
    let z3: Vec<f64> =
        z.iter().zip(&z2).zip(&r2).map(|((a, b), r)| (a * (1.0 / 3.0) + b * (2.0 / 3.0)) + r * c2).collect();
    check(&z3, 3)?;
    Ok(z3)
}
