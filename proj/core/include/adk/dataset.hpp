#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "adk/body.hpp"
#include "adk/camera.hpp"

namespace adk {

// Procedurally generated appearance and shape for one articulated figure.
// Every field is a deterministic function of (corpus seed, subject id).
struct SubjectSpec {
    int id = 0;
    std::vector<std::array<double, 3>> base_color;  // per bone, in [0,1]
    std::vector<double> stripe_freq;                // per bone, cycles along the axis
    std::vector<double> stripe_phase;
    std::vector<double> beta;  // per-bone scale

    static SubjectSpec make(uint64_t corpus_seed, int subject_id, int K);
};

// Lambertian ray-traced render of the posed figure: per-bone striped texture,
// one fixed light, mid-gray background. Returns ([3,H,W] rgb, [1,H,W] mask).
std::pair<Tensor, Tensor> oracle_render(const BodyState& state, const SubjectSpec& subject,
                                        const Camera& cam);

struct FrameRecord {
    int subject = 0, frame = 0, camera = 0;
    std::string image_path, mask_path, camera_path, pose_path;  // relative to root
};

struct Manifest {
    std::string root;
    uint64_t seed = 0;
    int resolution = 0, poses = 0, cameras = 0;
    std::vector<int> train_subjects, test_subjects;
    std::vector<FrameRecord> records;

    std::string resolve(const std::string& rel) const { return root + "/" + rel; }
    const FrameRecord& find(int subject, int frame, int camera) const;
};

struct CorpusConfig {
    int subjects_train = 32;
    int subjects_test = 4;
    int poses = 16;
    int cameras = 8;
    int resolution = 64;
    uint64_t seed = 1;
    double cam_radius = 2.5;
    double cam_fov_deg = 50.0;
    int body_vertices = 512;
};

// Renders the full corpus under out_dir and writes manifest.txt. Pose
// sequences are per-joint random walks clamped to +-60 degrees with
// adjacent-frame deltas under 10 degrees; frame 0 is the rest pose.
Manifest generate_corpus(const CorpusConfig& cfg, const std::string& out_dir);

Manifest load_manifest(const std::string& path);

// Reconstructs the body state for a record from its referenced files.
BodyState state_for_record(const Manifest& m, const FrameRecord& rec, int body_vertices = 512);
Camera camera_for_record(const Manifest& m, const FrameRecord& rec);

// The reference image for a subject is always the front camera at frame 0.
const FrameRecord& reference_record(const Manifest& m, int subject);

struct SplitSets {
    std::vector<FrameRecord> train;            // train subjects, train cams, train frames
    std::vector<FrameRecord> novel_view_eval;  // test subjects, held-out cameras
    std::vector<FrameRecord> novel_pose_eval;  // test subjects, front camera, held-out frames
    std::vector<int> train_cameras, eval_cameras;
    std::vector<int> train_frames, eval_frames;
};

SplitSets split_protocol(const Manifest& m);

}  // namespace adk
