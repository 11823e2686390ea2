use serde::{Deserialize, Serialize};

use super::Point;

pub const MIN_ZOOM: f64 = 0.1;
pub const MAX_ZOOM: f64 = 32.0;

/// Handle grab radius in screen pixels.
pub const DEFAULT_GRAB_TOLERANCE_PX: f64 = 6.0;

/// Maps image pixels to screen pixels: `screen = image * zoom + pan`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawView")]
pub struct ViewTransform {
    zoom: f64,
    pub pan_x: f64,
    pub pan_y: f64,
}

#[derive(Deserialize)]
struct RawView {
    zoom: f64,
    pan_x: f64,
    pan_y: f64,
}

impl From<RawView> for ViewTransform {
    fn from(raw: RawView) -> Self {
        Self::new(raw.zoom, raw.pan_x, raw.pan_y)
    }
}

impl Default for ViewTransform {
    fn default() -> Self {
        Self { zoom: 1.0, pan_x: 0.0, pan_y: 0.0 }
    }
}

impl ViewTransform {
    /// Builds a transform, clamping `zoom` into `[MIN_ZOOM, MAX_ZOOM]`.
    /// A non-finite zoom falls back to 1.
    pub fn new(zoom: f64, pan_x: f64, pan_y: f64) -> Self {
        Self { zoom: clamp_zoom(zoom), pan_x, pan_y }
    }

    pub fn zoom(&self) -> f64 {
        self.zoom
    }

    pub fn set_zoom(&mut self, zoom: f64) {
        self.zoom = clamp_zoom(zoom);
    }

    /// Multiplies the zoom by `factor` while keeping the image point under
    /// `anchor` (screen coordinates) fixed on screen.
    pub fn zoom_about(&self, anchor: Point, factor: f64) -> Self {
        let fixed = self.screen_to_image(anchor);
        let zoom = clamp_zoom(self.zoom * factor);
        Self { zoom, pan_x: anchor.x - fixed.x * zoom, pan_y: anchor.y - fixed.y * zoom }
    }

    pub fn image_to_screen(&self, p: Point) -> Point {
        Point::new(p.x * self.zoom + self.pan_x, p.y * self.zoom + self.pan_y)
    }

    pub fn screen_to_image(&self, p: Point) -> Point {
        Point::new((p.x - self.pan_x) / self.zoom, (p.y - self.pan_y) / self.zoom)
    }

    /// Grab radius in image pixels for a tolerance given in screen pixels.
    pub fn image_tolerance(&self, screen_px: f64) -> f64 {
        screen_px / self.zoom
    }
}

fn clamp_zoom(zoom: f64) -> f64 {
    if zoom.is_finite() {
        zoom.clamp(MIN_ZOOM, MAX_ZOOM)
    } else {
        1.0
    }
}
