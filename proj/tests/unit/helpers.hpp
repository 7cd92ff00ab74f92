#pragma once

#include <filesystem>
#include <sstream>
#include <string>

#include "pipegrade/ingest.hpp"

namespace test {

inline std::filesystem::path data_dir() { return PIPEGRADE_DATA_DIR; }

/// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::path(PIPEGRADE_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string header() {
  return "pipe_id,pipe_age_years,material,diameter_inches,shape,depth,soil_type,loading,waste_type,"
         "seismic_zone,structural_score,om_score,repair_history,total_length_feet,length_surveyed_feet,"
         "comprehensive_rating\n";
}

/// A complete, valid row; callers patch fields with text replacement.
inline std::string row(const std::string& id, int rating = 3) {
  return id + ",30,Vitrified clay pipe,8,Circular,0-10 Feet,Low corrosivity,Light traffic,Mildly corrosive,"
              "Zone 1,2,2,Minor maintenance,300,250," +
         std::to_string(rating) + "\n";
}

inline pipegrade::LoadResult parse(const std::string& csv) {
  std::istringstream in(csv);
  return pipegrade::parse_records(in);
}

}  // namespace test
