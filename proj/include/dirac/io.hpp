#pragma once

// CSV and JSON artifacts. Numbers in CSV files are printed with 17
// significant digits so that files round-trip and compare byte for byte.

#include <ostream>
#include <string>
#include <vector>

#include "dirac/config.hpp"

namespace dirac {

// columns: lambda,trace,k (k is nan in gaps)
void write_bands_csv(std::ostream& os, const BandStructure& bs);
Json band_edges_json(const BandStructure& bs);

// columns: x,re_g1,im_g1,re_g2,im_g2,abs_g1,abs_g2,gamma1,gamma2,Gamma1,Psi,Gamma2,delta
void write_period_csv(std::ostream& os, const FloquetFrame& frame);
Json floquet_json(const FloquetFrame& frame);

// columns: x,V over every stored piece sample, ascending in x
void write_potential_csv(std::ostream& os, const std::vector<PotentialPiece>& pieces);
// columns: step,T_start,T_end,N,owner,lambda
void write_schedule_csv(std::ostream& os, const SynthesisSchedule& s);

Json manifest_json(const RunConfig& config, const SynthesisSchedule& s);

struct Manifest {
  RunConfig config;
  SynthesisSchedule schedule;
};

/// Rebuilds every piece through make_piece from the recorded parameters.
/// Throws ConfigError naming the offending key for malformed manifests.
Manifest manifest_from_json(const Json& j);
Manifest load_manifest(const std::string& path);

/// One row of reports.json / summary.csv.
struct CheckRecord {
  std::string name;
  std::string subject;
  Json inputs = Json::object();
  Json measured = Json::object();
  Json tolerances = Json::object();
  double key_value = 0.0;  // the number compared against `limit`
  double limit = 0.0;
  bool passed = false;
  std::string message;
};

CheckRecord record(const DecayReport& r);
CheckRecord record(const StabilityReport& r);
CheckRecord record(const TailVerdict& v);
CheckRecord record(const EnvelopeReport& r);
CheckRecord record(const OscCheck& r);
CheckRecord record(const NonembeddingReport& r);
std::vector<CheckRecord> records(const ScheduleVerification& v);

Json reports_json(const std::vector<CheckRecord>& checks);
// columns: check,subject,value,limit,passed
void write_summary_csv(std::ostream& os, const std::vector<CheckRecord>& checks);

/// Writes `text` to `path`, creating parent directories.
void write_file(const std::string& path, const std::string& text);
std::string dump(const Json& j);

}  // namespace dirac
