#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <system_error>

#include "netkin/common.hpp"
#include "netkin/trajectory.hpp"

namespace netkin {

namespace detail {

// Locale-independent rendering with 17 significant digits: round-trip exact
// and byte-deterministic for fixed inputs.
inline void append_number(std::string& out, double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
  out.append(buf, res.ptr);
}

}  // namespace detail

// Layout: t, site, x, [eta,] <state components...>[, qvar]. One row per
// (snapshot, site); the quadratic variation is a run-level scalar repeated on
// each row of its snapshot.
inline std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t,site,x";
  const bool with_eta = traj.has_eta();
  const bool with_qvar = traj.has_quad_variation();
  if (with_eta) out += ",eta";
  for (const auto& name : traj.component_names()) {
    out += ',';
    out += name;
  }
  if (with_qvar) out += ",qvar";
  out += '\n';

  for (const auto& pt : traj.points()) {
    for (std::size_t s = 0; s < pt.state.sites(); ++s) {
      detail::append_number(out, pt.t);
      out += ',';
      out += std::to_string(s);
      out += ',';
      detail::append_number(out, traj.space().position(s));
      if (with_eta) {
        out += ',';
        detail::append_number(out, pt.eta(s));
      }
      for (std::size_t c = 0; c < pt.state.dim(); ++c) {
        out += ',';
        detail::append_number(out, pt.state(s, c));
      }
      if (with_qvar) {
        out += ',';
        detail::append_number(out, pt.quad_variation);
      }
      out += '\n';
    }
  }
  return out;
}

inline void export_csv(const Trajectory& traj, const std::filesystem::path& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("export_csv: cannot open " + path.string());
  const std::string body = trajectory_csv(traj);
  file.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!file) throw IoError("export_csv: write failed for " + path.string());
}

}  // namespace netkin
