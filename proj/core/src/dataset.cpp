#include "adk/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "adk/image.hpp"

namespace adk {

SubjectSpec SubjectSpec::make(uint64_t corpus_seed, int subject_id, int K) {
    SubjectSpec s;
    s.id = subject_id;
    Rng rng(Rng::mix(corpus_seed, 0x51b1ec7u, uint64_t(subject_id)));
    s.base_color.resize(size_t(K));
    s.stripe_freq.resize(size_t(K));
    s.stripe_phase.resize(size_t(K));
    s.beta.resize(size_t(K));
    for (int k = 0; k < K; ++k) {
        // Saturated-ish colors away from the gray background.
        for (int c = 0; c < 3; ++c) s.base_color[size_t(k)][size_t(c)] = rng.uniform(0.15, 1.0);
        s.stripe_freq[size_t(k)] = rng.uniform(1.0, 4.0);
        s.stripe_phase[size_t(k)] = rng.uniform(0.0, 1.0);
        s.beta[size_t(k)] = rng.uniform(0.85, 1.2);
    }
    return s;
}

std::pair<Tensor, Tensor> oracle_render(const BodyState& state, const SubjectSpec& subject,
                                        const Camera& cam) {
    cam.validate();
    const int H = cam.height, W = cam.width;
    auto rgb = Tensor::full({3, H, W}, 0.5f);  // mid-gray background
    auto mask = Tensor::zeros({1, H, W});
    const Vec3 o = cam.origin_world();
    const Mat3 rt = cam.R.transposed();
    const Vec3 light = Vec3{0.4, 0.8, 0.45}.normalized();
    const int64_t plane = int64_t(H) * W;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const Vec3 dir =
                (rt * Vec3{(x + 0.5 - cam.cx) / cam.fx, (y + 0.5 - cam.cy) / cam.fy, 1.0})
                    .normalized();
            auto hit = intersect_body(o, dir, state.posed_capsules);
            if (!hit) continue;
            const int k = hit->bone;
            const double stripe =
                0.75 + 0.25 * std::sin(2.0 * M_PI * (subject.stripe_freq[size_t(k)] * hit->axis_s +
                                                     subject.stripe_phase[size_t(k)]));
            const double shade = 0.3 + 0.7 * std::max(0.0, hit->normal.dot(light));
            const int64_t p = int64_t(y) * W + x;
            for (int c = 0; c < 3; ++c)
                rgb.data()[c * plane + p] =
                    float(subject.base_color[size_t(k)][size_t(c)] * stripe * shade);
            mask.data()[p] = 1.0f;
        }
    return {rgb, mask};
}

namespace {

std::string subject_dir(int subject) {
    std::ostringstream o;
    o << "subjects/s" << std::setw(3) << std::setfill('0') << subject;
    return o.str();
}

std::string frame_image_rel(int subject, int frame, int camera, bool mask) {
    std::ostringstream o;
    o << subject_dir(subject) << "/f" << std::setw(3) << std::setfill('0') << frame << "_c"
      << camera << (mask ? "_mask.pgm" : ".ppm");
    return o.str();
}

// Per-joint random walk: per-axis steps within +-5 degrees so the per-joint
// rotation delta stays under 10 degrees; angles clamp (by reflection) to
// +-60 degrees. Frame 0 is the rest pose.
std::vector<std::vector<Vec3>> make_pose_walk(uint64_t seed, int frames, int K) {
    const double limit = 60.0 * M_PI / 180.0;
    const double step = 5.0 * M_PI / 180.0;
    Rng rng(seed);
    std::vector<std::vector<Vec3>> out;
    std::vector<Vec3> cur(static_cast<size_t>(K));
    out.push_back(cur);
    for (int f = 1; f < frames; ++f) {
        for (int k = 0; k < K; ++k) {
            double* comps[3] = {&cur[size_t(k)].x, &cur[size_t(k)].y, &cur[size_t(k)].z};
            for (auto* c : comps) {
                double v = *c + rng.uniform(-step, step);
                if (v > limit) v = 2 * limit - v;
                if (v < -limit) v = -2 * limit - v;
                *c = v;
            }
        }
        out.push_back(cur);
    }
    return out;
}

Vec3 ring_center() { return {0.0, 1.0, 0.0}; }

}  // namespace

Manifest generate_corpus(const CorpusConfig& cfg, const std::string& out_dir) {
    ADK_CHECK(cfg.subjects_train > 0 && cfg.poses > 0 && cfg.cameras > 0,
              "generate_corpus: subjects/poses/cameras must be positive");
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    fs::create_directories(out_dir + "/cameras");

    Manifest m;
    m.root = out_dir;
    m.seed = cfg.seed;
    m.resolution = cfg.resolution;
    m.poses = cfg.poses;
    m.cameras = cfg.cameras;
    for (int s = 0; s < cfg.subjects_train; ++s) m.train_subjects.push_back(s);
    for (int s = 0; s < cfg.subjects_test; ++s) m.test_subjects.push_back(cfg.subjects_train + s);

    std::vector<std::string> cam_rel(static_cast<size_t>(cfg.cameras));
    std::vector<Camera> cams(static_cast<size_t>(cfg.cameras));
    for (int c = 0; c < cfg.cameras; ++c) {
        cams[size_t(c)] = ring_camera(c, cfg.cameras, cfg.cam_radius, ring_center(),
                                      cfg.resolution, cfg.resolution, cfg.cam_fov_deg);
        std::ostringstream name;
        name << "cameras/cam" << c << ".txt";
        cam_rel[size_t(c)] = name.str();
        save_camera(m.resolve(cam_rel[size_t(c)]), cams[size_t(c)]);
    }

    const BodyTemplate base = make_body_template(cfg.body_vertices);
    const int total_subjects = cfg.subjects_train + cfg.subjects_test;
    for (int s = 0; s < total_subjects; ++s) {
        const auto spec = SubjectSpec::make(cfg.seed, s, base.K);
        fs::create_directories(m.resolve(subject_dir(s)));
        const auto poses = make_pose_walk(Rng::mix(cfg.seed, 0x9a5e, uint64_t(s)), cfg.poses,
                                          base.K);
        const std::string pose_rel = subject_dir(s) + "/poses.txt";
        save_pose_sequence(m.resolve(pose_rel), poses);
        for (int f = 0; f < cfg.poses; ++f) {
            const BodyState st = pose_body(base, spec.beta, poses[size_t(f)]);
            for (int c = 0; c < cfg.cameras; ++c) {
                auto [rgb, mask] = oracle_render(st, spec, cams[size_t(c)]);
                FrameRecord rec;
                rec.subject = s;
                rec.frame = f;
                rec.camera = c;
                rec.image_path = frame_image_rel(s, f, c, false);
                rec.mask_path = frame_image_rel(s, f, c, true);
                rec.camera_path = cam_rel[size_t(c)];
                rec.pose_path = pose_rel;
                save_ppm(m.resolve(rec.image_path), rgb);
                save_pgm(m.resolve(rec.mask_path), mask);
                m.records.push_back(std::move(rec));
            }
        }
    }

    std::ofstream f(out_dir + "/manifest.txt");
    ADK_CHECK(bool(f), "generate_corpus: cannot write manifest");
    f << "# adk corpus manifest\n";
    f << "seed " << m.seed << '\n';
    f << "resolution " << m.resolution << '\n';
    f << "poses " << m.poses << '\n';
    f << "cameras " << m.cameras << '\n';
    f << "train_subjects";
    for (int s : m.train_subjects) f << ' ' << s;
    f << "\ntest_subjects";
    for (int s : m.test_subjects) f << ' ' << s;
    f << "\n# records: subject frame camera image mask camera_file pose_file\n";
    for (const auto& r : m.records)
        f << r.subject << ' ' << r.frame << ' ' << r.camera << ' ' << r.image_path << ' '
          << r.mask_path << ' ' << r.camera_path << ' ' << r.pose_path << '\n';
    return m;
}

Manifest load_manifest(const std::string& path) {
    std::ifstream f(path);
    ADK_CHECK(bool(f), "load_manifest: cannot open ", path);
    Manifest m;
    m.root = std::filesystem::path(path).parent_path().string();
    if (m.root.empty()) m.root = ".";
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream is(line);
        std::string key;
        is >> key;
        if (key == "seed") {
            is >> m.seed;
        } else if (key == "resolution") {
            is >> m.resolution;
        } else if (key == "poses") {
            is >> m.poses;
        } else if (key == "cameras") {
            is >> m.cameras;
        } else if (key == "train_subjects" || key == "test_subjects") {
            auto& v = key[0] == 't' && key[1] == 'r' ? m.train_subjects : m.test_subjects;
            int s;
            while (is >> s) v.push_back(s);
        } else {
            FrameRecord r;
            r.subject = std::stoi(key);
            is >> r.frame >> r.camera >> r.image_path >> r.mask_path >> r.camera_path >>
                r.pose_path;
            ADK_CHECK(bool(is), "load_manifest: malformed record line: ", line);
            m.records.push_back(std::move(r));
        }
    }
    ADK_CHECK(!m.records.empty(), "load_manifest: no records in ", path);
    return m;
}

const FrameRecord& Manifest::find(int subject, int frame, int camera) const {
    for (const auto& r : records)
        if (r.subject == subject && r.frame == frame && r.camera == camera) return r;
    fail("manifest: no record for subject ", subject, " frame ", frame, " camera ", camera);
}

BodyState state_for_record(const Manifest& m, const FrameRecord& rec, int body_vertices) {
    const auto tmpl = make_body_template(body_vertices);
    const auto spec = SubjectSpec::make(m.seed, rec.subject, tmpl.K);
    const auto poses = load_pose_sequence(m.resolve(rec.pose_path), tmpl.K);
    ADK_CHECK(rec.frame < int(poses.size()), "state_for_record: frame ", rec.frame,
              " beyond pose sequence of length ", poses.size());
    return pose_body(tmpl, spec.beta, poses[size_t(rec.frame)]);
}

Camera camera_for_record(const Manifest& m, const FrameRecord& rec) {
    return load_camera(m.resolve(rec.camera_path));
}

const FrameRecord& reference_record(const Manifest& m, int subject) {
    return m.find(subject, 0, 0);
}

SplitSets split_protocol(const Manifest& m) {
    ADK_CHECK(m.cameras >= 3, "split_protocol: need at least 3 cameras, have ", m.cameras);
    ADK_CHECK(m.poses >= 4, "split_protocol: need at least 4 pose frames, have ", m.poses);
    ADK_CHECK(!m.test_subjects.empty(), "split_protocol: no test subjects");
    SplitSets s;
    const int eval_cams = std::max(1, m.cameras / 4);  // 8 -> 2
    for (int c = 0; c < m.cameras - eval_cams; ++c) s.train_cameras.push_back(c);
    for (int c = m.cameras - eval_cams; c < m.cameras; ++c) s.eval_cameras.push_back(c);
    const int eval_frames = std::max(1, m.poses / 4);  // 16 -> 4
    for (int f = 0; f < m.poses - eval_frames; ++f) s.train_frames.push_back(f);
    for (int f = m.poses - eval_frames; f < m.poses; ++f) s.eval_frames.push_back(f);

    auto is_train_subject = [&](int subj) {
        return std::find(m.train_subjects.begin(), m.train_subjects.end(), subj) !=
               m.train_subjects.end();
    };
    auto in = [](const std::vector<int>& v, int x) {
        return std::find(v.begin(), v.end(), x) != v.end();
    };
    // novel-view eval uses a small fixed frame subset per held-out camera
    std::vector<int> nv_frames;
    for (int i = 0; i < 4 && i * 2 < m.poses - eval_frames; ++i) nv_frames.push_back(i * 2);
    for (const auto& r : m.records) {
        if (is_train_subject(r.subject)) {
            if (in(s.train_cameras, r.camera) && in(s.train_frames, r.frame))
                s.train.push_back(r);
        } else {
            if (in(s.eval_cameras, r.camera) && in(nv_frames, r.frame))
                s.novel_view_eval.push_back(r);
            if (r.camera == 0 && in(s.eval_frames, r.frame)) s.novel_pose_eval.push_back(r);
        }
    }
    return s;
}

}  // namespace adk
