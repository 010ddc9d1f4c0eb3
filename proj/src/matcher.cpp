#include "afp/matcher.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_map>

namespace afp {

void ingest(FingerprintDb& db, const std::string& track_id, Fingerprint fp) {
  if (track_id.empty() || track_id.find('\t') != std::string::npos ||
      track_id.find('\n') != std::string::npos) {
    throw std::invalid_argument("track id is empty or contains tab/newline");
  }
  if (db.digest && *db.digest != fp.config_digest) {
    throw std::invalid_argument("fingerprint config digest does not match db");
  }
  if (!db.digest) db.digest = fp.config_digest;
  db.entries[track_id] = std::move(fp);
}

std::optional<MatchResult> query(const FingerprintDb& db, const Fingerprint& q,
                                 double tau) {
  if (q.peaks.empty()) {
    throw std::invalid_argument("query fingerprint is empty");
  }
  if (db.digest && *db.digest != q.config_digest) {
    throw std::invalid_argument("query config digest does not match db");
  }

  MatchResult best;
  bool found = false;
  std::vector<std::vector<std::uint32_t>> frames_by_bin;
  std::unordered_map<long, long> hist;

  for (const auto& [id, entry] : db.entries) {  // map order = sorted ids
    frames_by_bin.assign(entry.bins, {});
    for (const Peak& p : entry.peaks) frames_by_bin[p.bin].push_back(p.frame);

    hist.clear();
    for (const Peak& p : q.peaks) {
      if (p.bin >= entry.bins) continue;
      for (std::uint32_t f : frames_by_bin[p.bin]) {
        ++hist[static_cast<long>(f) - static_cast<long>(p.frame)];
      }
    }

    long entry_hits = 0;
    long entry_offset = 0;
    for (const auto& [offset, hits] : hist) {
      if (hits > entry_hits || (hits == entry_hits && hits > 0 && offset < entry_offset)) {
        entry_hits = hits;
        entry_offset = offset;
      }
    }
    // Strictly-greater keeps the lexicographically smallest id on ties.
    if (entry_hits > best.raw_hits) {
      best.raw_hits = entry_hits;
      best.offset_frames = static_cast<int>(entry_offset);
      best.track_id = id;
      found = true;
    }
  }

  if (!found || best.raw_hits == 0) return std::nullopt;
  best.score = static_cast<double>(best.raw_hits) /
               static_cast<double>(q.peaks.size());
  if (best.score < tau) return std::nullopt;
  return best;
}

namespace {

std::string safe_filename(const std::string& track_id,
                          const std::set<std::string>& taken) {
  std::string base;
  for (char c : track_id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
    base.push_back(ok ? c : '_');
  }
  if (base.empty()) base = "track";
  std::string name = base + ".afp";
  for (int suffix = 2; taken.count(name) != 0; ++suffix) {
    name = base + "_" + std::to_string(suffix) + ".afp";
  }
  return name;
}

}  // namespace

void save_db(const FingerprintDb& db, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::set<std::string> taken;
  std::string index;
  for (const auto& [id, fp] : db.entries) {
    const std::string name = safe_filename(id, taken);
    taken.insert(name);
    serialize(fp, dir / name);
    index += id;
    index += '\t';
    index += name;
    index += '\n';
  }
  std::ofstream out(dir / "index.tsv", std::ios::binary | std::ios::trunc);
  if (!out || !out.write(index.data(), static_cast<std::streamsize>(index.size()))) {
    throw std::runtime_error("failed to write db index in " + dir.string());
  }
}

FingerprintDb load_db(const std::filesystem::path& dir) {
  FingerprintDb db;
  const auto index_path = dir / "index.tsv";
  if (!std::filesystem::exists(index_path)) return db;  // empty db

  std::ifstream in(index_path, std::ios::binary);
  if (!in) throw ParseError("cannot read db index: " + index_path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError("malformed db index line: " + line);
    }
    const std::string id = line.substr(0, tab);
    const std::string name = line.substr(tab + 1);
    const auto fp_path = dir / name;
    if (!std::filesystem::exists(fp_path)) {
      throw ParseError("db index references missing file: " + name);
    }
    Fingerprint fp = deserialize(fp_path);
    if (db.digest && *db.digest != fp.config_digest) {
      throw ParseError("db entries disagree on config digest");
    }
    if (!db.digest) db.digest = fp.config_digest;
    db.entries[id] = std::move(fp);
  }
  return db;
}

}  // namespace afp
