#include "adk/camera.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

namespace adk {

void Camera::validate() const {
    ADK_CHECK(fx > 0 && fy > 0, "camera: focal lengths must be positive, got fx=", fx,
              " fy=", fy);
    ADK_CHECK(height > 0 && width > 0, "camera: bad resolution ", height, "x", width);
    const Mat3 rtr = R.transposed() * R;
    double err = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) err = std::max(err, std::abs(rtr.at(i, j) - (i == j ? 1 : 0)));
    ADK_CHECK(err < 1e-6, "camera: rotation is not orthonormal (err=", err, ")");
    ADK_CHECK(std::abs(R.det() - 1.0) < 1e-6, "camera: rotation determinant ", R.det(),
              " is not +1");
}

Ray cast_ray(const Camera& cam, double u, double v, const Box3& bounds) {
    Ray r;
    r.o = cam.origin_world();
    const Vec3 dir_cam{(u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0};
    r.d = (cam.R.transposed() * dir_cam).normalized();
    double t0, t1;
    if (ray_box(r.o, r.d, bounds, t0, t1) && t1 > 0) {
        r.tn = std::max(t0, 0.0);
        r.tf = t1;
    } else {
        r.tn = r.tf = 0.0;  // empty-interval flag
    }
    return r;
}

std::vector<Ray> cast_rays(const Camera& cam, const Box3& bounds) {
    std::vector<Ray> rays;
    rays.reserve(size_t(cam.height) * size_t(cam.width));
    for (int y = 0; y < cam.height; ++y)
        for (int x = 0; x < cam.width; ++x)
            rays.push_back(cast_ray(cam, x + 0.5, y + 0.5, bounds));
    return rays;
}

std::array<double, 6> plucker_embed(const Ray& ray) {
    const double n = ray.d.norm();
    ADK_CHECK(n > 1e-12, "plucker_embed: zero-length direction");
    ADK_CHECK(std::abs(n - 1.0) < 1e-6, "plucker_embed: direction must be unit length, |d|=", n);
    const Vec3 m = ray.o.cross(ray.d);
    return {ray.d.x, ray.d.y, ray.d.z, m.x, m.y, m.z};
}

Tensor plucker_map(const Camera& cam) {
    cam.validate();
    const int H = cam.height, W = cam.width;
    auto out = Tensor::zeros({6, H, W});
    const Vec3 o = cam.origin_world();
    const Mat3 rt = cam.R.transposed();
    float* d = out.data();
    const int64_t plane = int64_t(H) * W;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const Vec3 dir =
                (rt * Vec3{(x + 0.5 - cam.cx) / cam.fx, (y + 0.5 - cam.cy) / cam.fy, 1.0})
                    .normalized();
            const Vec3 m = o.cross(dir);
            const int64_t p = int64_t(y) * W + x;
            d[0 * plane + p] = float(dir.x);
            d[1 * plane + p] = float(dir.y);
            d[2 * plane + p] = float(dir.z);
            d[3 * plane + p] = float(m.x);
            d[4 * plane + p] = float(m.y);
            d[5 * plane + p] = float(m.z);
        }
    return out;
}

void save_camera(const std::string& path, const Camera& cam) {
    std::ofstream f(path);
    ADK_CHECK(bool(f), "save_camera: cannot open ", path);
    f << "# R[9] row-major, t[3], fx fy cx cy, H W\n";
    f << std::setprecision(17);
    for (int i = 0; i < 9; ++i) f << cam.R.m[size_t(i)] << ' ';
    f << cam.t.x << ' ' << cam.t.y << ' ' << cam.t.z << ' ';
    f << cam.fx << ' ' << cam.fy << ' ' << cam.cx << ' ' << cam.cy << ' ';
    f << cam.height << ' ' << cam.width << '\n';
}

Camera load_camera(const std::string& path) {
    std::ifstream f(path);
    ADK_CHECK(bool(f), "load_camera: cannot open ", path);
    std::string header;
    std::getline(f, header);
    Camera cam;
    for (int i = 0; i < 9; ++i) f >> cam.R.m[size_t(i)];
    f >> cam.t.x >> cam.t.y >> cam.t.z;
    f >> cam.fx >> cam.fy >> cam.cx >> cam.cy;
    f >> cam.height >> cam.width;
    ADK_CHECK(bool(f), "load_camera: malformed file ", path);
    cam.validate();
    return cam;
}

Camera ring_camera(int index, int count, double radius, const Vec3& look_at, int height,
                   int width, double fov_deg) {
    ADK_CHECK(count > 0 && index >= 0 && index < count, "ring_camera: index ", index, " of ",
              count);
    const double angle = 2.0 * M_PI * double(index) / double(count);
    const Vec3 pos = look_at + Vec3{radius * std::sin(angle), 0.0, radius * std::cos(angle)};
    // Build world-to-camera: camera z looks from pos toward look_at, y down.
    // Rows (right, down, fwd) satisfy right x down = fwd, so det(R) = +1.
    const Vec3 fwd = (look_at - pos).normalized();
    const Vec3 world_up{0, 1, 0};
    const Vec3 right = fwd.cross(world_up).normalized();
    const Vec3 down = fwd.cross(right).normalized();
    Camera cam;
    cam.R.m = {right.x, right.y, right.z, down.x, down.y, down.z, fwd.x, fwd.y, fwd.z};
    cam.t = -(cam.R * pos);
    cam.height = height;
    cam.width = width;
    const double f = (width / 2.0) / std::tan(fov_deg * M_PI / 360.0);
    cam.fx = cam.fy = f;
    cam.cx = width / 2.0;
    cam.cy = height / 2.0;
    cam.validate();
    return cam;
}

}  // namespace adk
