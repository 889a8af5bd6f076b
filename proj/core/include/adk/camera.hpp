#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "adk/geom3.hpp"
#include "adk/tensor.hpp"

namespace adk {

// Pinhole camera. Extrinsics map world to camera: x_cam = R x_world + t.
// The camera looks along +z in its own frame; pixel (u,v) follows
// u = fx X/Z + cx, v = fy Y/Z + cy. Pixel centers sit at integer + 0.5.
struct Camera {
    double fx = 0, fy = 0, cx = 0, cy = 0;
    Mat3 R;
    Vec3 t;
    int height = 0, width = 0;

    void validate() const;

    Vec3 origin_world() const { return -(R.transposed() * t); }
    Vec3 forward_world() const { return R.transposed() * Vec3{0, 0, 1}; }

    // Returns pixel coordinates and camera-space depth.
    struct Projection {
        double u, v, depth;
    };
    Projection project(const Vec3& p_world) const {
        const Vec3 pc = R * p_world + t;
        return {fx * pc.x / pc.z + cx, fy * pc.y / pc.z + cy, pc.z};
    }
};

// A single camera ray; [t_n, t_f] is the active segment. A non-positive
// interval (t_f <= t_n) marks an empty intersection, rendered as background.
struct Ray {
    Vec3 o;
    Vec3 d;  // unit
    double tn = 0, tf = 0;
    bool empty() const { return !(tf > tn); }
};

// Ray through an arbitrary continuous pixel coordinate (u, v), clipped to the
// padded body box. The direction is unit-length in world space.
Ray cast_ray(const Camera& cam, double u, double v, const Box3& bounds);

// One ray per pixel center, row-major.
std::vector<Ray> cast_rays(const Camera& cam, const Box3& bounds);

// Plücker coordinates (d, o x d); invariant to sliding o along the ray.
std::array<double, 6> plucker_embed(const Ray& ray);

// Per-pixel Plücker embedding as a [6,H,W] tensor at full image resolution.
Tensor plucker_map(const Camera& cam);

// Camera file: one documented header line, then 18 numbers on one line:
// 9 rotation (row-major), 3 translation, fx fy cx cy, H W.
void save_camera(const std::string& path, const Camera& cam);
Camera load_camera(const std::string& path);

// Ring of `count` cameras at `radius` from `look_at`, all at the target
// height, facing the body. Camera 0 sits on +z (the front camera).
Camera ring_camera(int index, int count, double radius, const Vec3& look_at, int height,
                   int width, double fov_deg);

}  // namespace adk
