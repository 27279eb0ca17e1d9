#include "cldnav/plots.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cldnav/errors.hpp"

namespace cldnav {

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

class SvgCanvas {
 public:
  SvgCanvas(double x_min, double x_max, double y_min, double y_max, double px_per_meter)
      : x_min_(x_min), y_max_(y_max), scale_(px_per_meter) {
    width_ = (x_max - x_min) * scale_;
    height_ = (y_max - y_min) * scale_;
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width_) << "\" height=\""
         << num(height_) << "\" viewBox=\"0 0 " << num(width_) << " " << num(height_) << "\">\n";
    out_ << "<rect x=\"0\" y=\"0\" width=\"" << num(width_) << "\" height=\"" << num(height_)
         << "\" fill=\"#ffffff\" stroke=\"#888888\"/>\n";
  }

  double px(double x) const { return (x - x_min_) * scale_; }
  double py(double y) const { return (y_max_ - y) * scale_; }

  void polygon(const std::vector<Vec2>& pts, const std::string& fill, const std::string& stroke,
               double stroke_width) {
    out_ << "<polygon points=\"";
    for (const auto& p : pts) out_ << num(px(p.x())) << ',' << num(py(p.y())) << ' ';
    out_ << "\" fill=\"" << fill << "\" stroke=\"" << stroke << "\" stroke-width=\""
         << num(stroke_width) << "\"/>\n";
  }

  void polyline(const std::vector<Vec2>& pts, const std::string& stroke, double stroke_width,
                const std::string& dash = "") {
    out_ << "<polyline points=\"";
    for (const auto& p : pts) out_ << num(px(p.x())) << ',' << num(py(p.y())) << ' ';
    out_ << "\" fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << num(stroke_width)
         << "\"";
    if (!dash.empty()) out_ << " stroke-dasharray=\"" << dash << "\"";
    out_ << "/>\n";
  }

  void circle(const Vec2& c, double r_px, const std::string& fill) {
    out_ << "<circle cx=\"" << num(px(c.x())) << "\" cy=\"" << num(py(c.y())) << "\" r=\""
         << num(r_px) << "\" fill=\"" << fill << "\"/>\n";
  }

  void text(double x_px, double y_px, const std::string& content, int size = 12) {
    out_ << "<text x=\"" << num(x_px) << "\" y=\"" << num(y_px) << "\" font-size=\"" << size
         << "\" font-family=\"sans-serif\">" << content << "</text>\n";
  }

  std::string finish() {
    out_ << "</svg>\n";
    return out_.str();
  }

 private:
  double x_min_, y_max_, scale_, width_, height_;
  std::ostringstream out_;
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << content;
}

std::string trajectory_svg(const RunMetrics& run, const Scenario& sc) {
  const double pad = 1.0;
  SvgCanvas canvas(sc.workspace.x_min - pad, sc.workspace.x_max + pad, sc.workspace.y_min - pad,
                   sc.workspace.y_max + pad, 24.0);

  for (const auto& o : sc.obstacles) {
    canvas.polygon(occupied_region(o.shape, o.pose).vertices(), "#000000", "#000000", 1.0);
  }
  std::vector<Vec2> ref;
  for (const auto& w : sc.reference.waypoints) ref.push_back(w.position());
  canvas.polyline(ref, "#2ca02c", 2.0, "6,4");

  std::vector<Vec2> traj;
  for (const auto& s : run.trajectory) traj.push_back(s.position());
  canvas.polyline(traj, "#1f77b4", 2.0);

  // Robot body outlines along the run.
  const std::size_t stride = std::max<std::size_t>(1, run.trajectory.size() / 12);
  for (std::size_t i = 0; i < run.trajectory.size(); i += stride) {
    canvas.polygon(occupied_region(sc.robot_shape, run.trajectory[i]).vertices(), "none",
                   "#e0c000", 1.5);
  }

  for (const auto& s : sc.sensors) {
    canvas.circle(s.position, 5.0, "#d62728");
    canvas.text(canvas.px(s.position.x()) + 7.0, canvas.py(s.position.y()) - 4.0,
                "sensor " + std::to_string(s.id));
  }
  canvas.circle(sc.goal.position(), 4.0, "#555555");
  canvas.text(10.0, 16.0, run.scheme + (run.reached_goal ? " (goal reached)" :
                                        run.deadlocked ? " (deadlock)" : " (stopped)"), 14);
  return canvas.finish();
}

std::string bar_chart_svg(const std::string& title,
                          const std::vector<std::string>& group_labels,
                          const std::vector<std::pair<std::string, std::vector<double>>>& series) {
  const double width = 640.0;
  const double height = 360.0;
  const double margin = 50.0;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\""
      << num(height) << "\">\n";
  out << "<rect width=\"" << num(width) << "\" height=\"" << num(height)
      << "\" fill=\"#ffffff\" stroke=\"#888888\"/>\n";
  out << "<text x=\"" << num(margin) << "\" y=\"24\" font-size=\"15\" "
      << "font-family=\"sans-serif\">" << title << "</text>\n";

  double max_val = 1e-12;
  for (const auto& [label, values] : series) {
    for (double v : values) max_val = std::max(max_val, v);
  }
  const std::vector<std::string> palette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd"};
  const double plot_h = height - 2.0 * margin;
  const double plot_w = width - 2.0 * margin;
  const std::size_t n_groups = group_labels.size();
  const std::size_t n_series = series.size();
  const double group_w = plot_w / std::max<std::size_t>(1, n_groups);
  const double bar_w = 0.8 * group_w / std::max<std::size_t>(1, n_series);

  for (std::size_t g = 0; g < n_groups; ++g) {
    for (std::size_t s = 0; s < n_series; ++s) {
      const double v = series[s].second.at(g);
      const double h = plot_h * v / max_val;
      const double x = margin + g * group_w + 0.1 * group_w + s * bar_w;
      const double y = height - margin - h;
      out << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(bar_w * 0.9)
          << "\" height=\"" << num(h) << "\" fill=\"" << palette[s % palette.size()] << "\"/>\n";
      char val[48];
      std::snprintf(val, sizeof(val), "%.3g", v);
      out << "<text x=\"" << num(x) << "\" y=\"" << num(y - 4.0)
          << "\" font-size=\"10\" font-family=\"sans-serif\">" << val << "</text>\n";
    }
    out << "<text x=\"" << num(margin + g * group_w + 0.1 * group_w) << "\" y=\""
        << num(height - margin + 16.0) << "\" font-size=\"12\" font-family=\"sans-serif\">"
        << group_labels[g] << "</text>\n";
  }
  for (std::size_t s = 0; s < n_series; ++s) {
    const double y = 40.0 + 16.0 * s;
    out << "<rect x=\"" << num(width - margin - 110.0) << "\" y=\"" << num(y - 9.0)
        << "\" width=\"10\" height=\"10\" fill=\"" << palette[s % palette.size()] << "\"/>\n";
    out << "<text x=\"" << num(width - margin - 95.0) << "\" y=\"" << num(y)
        << "\" font-size=\"12\" font-family=\"sans-serif\">" << series[s].first << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace

std::vector<std::string> emit_plots(const ComparisonReport& report, const Scenario& scenario,
                                    const std::string& out_dir) {
  if (report.runs.empty()) throw ValidationError("emit_plots needs a nonempty report");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir + "': " + ec.message());

  std::vector<std::string> written;
  for (const auto& run : report.runs) {
    const std::string path = out_dir + "/trajectory_" + run.scheme + ".svg";
    write_file(path, trajectory_svg(run, scenario));
    written.push_back(path);
  }

  std::vector<std::string> sensor_labels;
  for (const auto& s : scenario.sensors) sensor_labels.push_back("sensor " + std::to_string(s.id));
  std::vector<std::pair<std::string, std::vector<double>>> bits_series;
  for (const auto& run : report.runs) {
    std::vector<double> vals;
    for (const auto& s : scenario.sensors) vals.push_back(run.collected_bits_by_sensor.at(s.id));
    bits_series.emplace_back(run.scheme, std::move(vals));
  }
  if (!sensor_labels.empty()) {
    const std::string path = out_dir + "/collected_bits.svg";
    write_file(path, bar_chart_svg("Collected data (bits)", sensor_labels, bits_series));
    written.push_back(path);
  }

  std::vector<std::string> model_labels;
  for (const auto& m : scenario.specs) model_labels.push_back(m.name);
  std::vector<std::pair<std::string, std::vector<double>>> err_series;
  for (const auto& run : report.runs) {
    std::vector<double> vals;
    for (const auto& m : scenario.specs) vals.push_back(run.predicted_error_by_model.at(m.name));
    err_series.emplace_back(run.scheme, std::move(vals));
  }
  if (!model_labels.empty()) {
    const std::string path = out_dir + "/predicted_error.svg";
    write_file(path, bar_chart_svg("Predicted classification error", model_labels, err_series));
    written.push_back(path);
  }
  return written;
}

}  // namespace cldnav
