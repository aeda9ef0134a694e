#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "twoview/bench/scene.hpp"
#include "twoview/error.hpp"

namespace twoview::bench {

std::optional<Mat3> ScenePair::gt_fundamental() const {
  if (gt_model) return gt_model->matrix();
  if (gt_pose && calibrated()) {
    return fundamental_from_essential(essential_from_pose(*gt_pose), *k1, *k2);
  }
  return std::nullopt;
}

namespace {

[[noreturn]] void data_error(const std::string& source, std::size_t line,
                             const std::string& what) {
  throw Error(ErrorCode::kDataError,
              source + ":" + std::to_string(line) + ": " + what);
}

std::string strip_comment(const std::string& line) {
  const auto hash = line.find('#');
  return hash == std::string::npos ? line : line.substr(0, hash);
}

std::vector<double> read_numbers(std::istream& in) {
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size()) {
      throw Error(ErrorCode::kDataError, "not a number: '" + token + "'");
    }
    values.push_back(v);
  }
  return values;
}

}  // namespace

std::vector<Correspondence> parse_correspondences(std::istream& in,
                                                  const std::string& source) {
  std::vector<Correspondence> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(strip_comment(line));
    std::vector<double> v;
    try {
      v = read_numbers(fields);
    } catch (const Error& e) {
      data_error(source, line_no, e.what());
    }
    if (v.empty()) continue;
    if (v.size() != 9 && v.size() != 10) {
      data_error(source, line_no,
                 "expected 9 or 10 fields, got " + std::to_string(v.size()));
    }
    std::optional<double> prior;
    if (v.size() == 10) prior = v[9];
    try {
      out.push_back(make_correspondence(Vec2(v[0], v[1]), Vec2(v[2], v[3]), v[4],
                                        v[5], v[6], v[7], v[8], prior));
    } catch (const Error& e) {
      data_error(source, line_no, e.what());
    }
  }
  return out;
}

void write_correspondences(std::ostream& out,
                           const std::vector<Correspondence>& correspondences) {
  out << "# x1 y1 x2 y2 alpha1 q1 alpha2 q2 snn [prior]\n";
  out << std::setprecision(17);
  for (const Correspondence& c : correspondences) {
    out << c.p1.x() << ' ' << c.p1.y() << ' ' << c.p2.x() << ' ' << c.p2.y()
        << ' ' << c.alpha1 << ' ' << c.q1 << ' ' << c.alpha2 << ' ' << c.q2
        << ' ' << c.snn_ratio.value_or(1.0);
    if (c.prior) out << ' ' << *c.prior;
    out << '\n';
  }
}

Calibration parse_calibration(std::istream& in, const std::string& source) {
  std::ostringstream text;
  std::string line;
  while (std::getline(in, line)) text << strip_comment(line) << '\n';
  std::istringstream fields(text.str());
  std::vector<double> v;
  try {
    v = read_numbers(fields);
  } catch (const Error& e) {
    throw Error(ErrorCode::kDataError, source + ": " + e.what());
  }
  if (v.size() != 30) {
    throw Error(ErrorCode::kDataError,
                source + ": expected 30 numbers, got " + std::to_string(v.size()));
  }
  auto mat = [&](std::size_t offset) {
    Mat3 m;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) m(r, c) = v[offset + 3 * r + c];
    }
    return m;
  };
  try {
    return Calibration{CameraIntrinsics(mat(0)), CameraIntrinsics(mat(9)),
                       make_pose(mat(18), Vec3(v[27], v[28], v[29]))};
  } catch (const Error& e) {
    throw Error(ErrorCode::kDataError, source + ": " + e.what());
  }
}

void write_calibration(std::ostream& out, const Calibration& calibration) {
  out << std::setprecision(17);
  auto put = [&](const Mat3& m, const char* label) {
    out << "# " << label << '\n';
    for (int r = 0; r < 3; ++r) {
      out << m(r, 0) << ' ' << m(r, 1) << ' ' << m(r, 2) << '\n';
    }
  };
  put(calibration.k1.matrix(), "K1");
  put(calibration.k2.matrix(), "K2");
  put(calibration.pose.R, "R");
  out << "# t\n"
      << calibration.pose.t.x() << ' ' << calibration.pose.t.y() << ' '
      << calibration.pose.t.z() << '\n';
}

ScenePair load_scene(const std::filesystem::path& corr_file) {
  ScenePair scene;
  scene.id = corr_file.stem().string();
  std::ifstream in(corr_file);
  if (!in) {
    throw Error(ErrorCode::kDataError, "cannot open " + corr_file.string());
  }
  scene.correspondences = parse_correspondences(in, corr_file.string());

  std::filesystem::path cal_file = corr_file;
  cal_file.replace_extension(".cal");
  if (std::filesystem::exists(cal_file)) {
    std::ifstream cal(cal_file);
    if (!cal) throw Error(ErrorCode::kDataError, "cannot open " + cal_file.string());
    Calibration c = parse_calibration(cal, cal_file.string());
    scene.k1 = c.k1;
    scene.k2 = c.k2;
    scene.gt_pose = c.pose;
  }
  return scene;
}

void save_scene(const std::filesystem::path& dir, const ScenePair& scene) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / (scene.id + ".corr"));
    if (!out) throw Error(ErrorCode::kDataError, "cannot write to " + dir.string());
    write_correspondences(out, scene.correspondences);
  }
  if (scene.calibrated() && scene.gt_pose) {
    std::ofstream out(dir / (scene.id + ".cal"));
    write_calibration(out, Calibration{*scene.k1, *scene.k2, *scene.gt_pose});
  }
}

Dataset load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::kDataError, dir.string() + " is not a directory");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".corr") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  Dataset dataset;
  for (const auto& file : files) {
    try {
      dataset.pairs.push_back(load_scene(file));
    } catch (const Error& e) {
      dataset.failures.push_back({file.stem().string(), e.what()});
    }
  }
  return dataset;
}

}  // namespace twoview::bench
