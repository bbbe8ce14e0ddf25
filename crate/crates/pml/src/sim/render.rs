use crate::image::GrayImage;
use crate::sim::camera::CameraModel;
use crate::sim::geom::{within_polyline, Vec2};
use crate::sim::track::TrackSpec;
use crate::vehicle::VehicleState;

/// Renders the road-only segmentation frame seen from the vehicle.
///
/// Every pixel casts a ray through the pinhole onto the ground plane; the
/// pixel is 1.0 when the hit point lies on the road (within the road
/// half-width of the spine), 0.0 for everything else, including hits
/// beyond the camera's max range and rays that never reach the ground.
///
/// The arithmetic is arranged so that reflecting the state across a
/// straight track's axis produces the exact left-right mirror of the frame:
/// pixel coordinates negate exactly, and every world coordinate is formed
/// from sums and products that negate bit-exactly with them.
pub fn render_observation(
    state: &VehicleState,
    track: &TrackSpec,
    camera: &CameraModel,
) -> GrayImage {
    let size = camera.image_size;
    let half = size as f64 / 2.0;
    let f = camera.focal();
    let (sin_p, cos_p) = (camera.pitch.sin(), camera.pitch.cos());
    let (sin_t, cos_t) = (state.heading.sin(), state.heading.cos());
    let max_range_sq = camera.max_range * camera.max_range;
    let spine = &track.road_spine;

    let mut data = vec![0.0; size * size];
    for r in 0..size {
        let v = r as f64 + 0.5 - half;
        // Downward component of the ray; non-positive means sky.
        let denom = f * sin_p + v * cos_p;
        if denom <= 0.0 {
            continue;
        }
        let t = camera.height / denom;
        // Ground distance straight ahead for this image row.
        let fwd = t * (f * cos_p - v * sin_p);
        if fwd <= 0.0 {
            continue;
        }
        let fwd_x = fwd * cos_t;
        let fwd_y = fwd * sin_t;
        let row = &mut data[r * size..(r + 1) * size];
        for (c, px) in row.iter_mut().enumerate() {
            let u = c as f64 + 0.5 - half;
            // Rightward ground offset for this pixel.
            let lat = t * u;
            if fwd * fwd + lat * lat > max_range_sq {
                continue;
            }
            let gx = state.x + fwd_x - lat * sin_t;
            let gy = state.y + fwd_y + lat * cos_t;
            if within_polyline(Vec2::new(gx, gy), spine, track.road_half_width) {
                *px = 1.0;
            }
        }
    }
    GrayImage::new(size, size, data).expect("renderer writes only 0/1 pixels")
}
