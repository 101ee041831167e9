#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "trialpower/core.hpp"

namespace trialpower {

/// Long-format trial data:
///
///   # categories: 7
///   # recovery_threshold: 1
///   # horizon_days: 28
///   # recode: 0=1,1=1,2=1,3=2,4=3,5=4,6=5,7=6,8=7
///   subject_id,arm,day,score
///   s1,0,1,4
///
/// Header keys are optional. Without horizon_days the largest day is used;
/// with a recode map every raw score must appear in it. Arms are 0 (control)
/// and 1 (treatment).
struct LoadedDataset {
    TrialDataset dataset;
    std::vector<std::string> warnings;
    std::map<int, int> recode;
};

/// Throws DataError naming the offending line. Summary lines and warnings go
/// to `log` when given.
LoadedDataset read_dataset(std::istream& in, std::ostream* log = nullptr);
LoadedDataset load_dataset(const std::string& path, std::ostream* log = nullptr);

/// Observed cells only, subjects in dataset order.
void write_dataset(const TrialDataset& dataset, std::ostream& out);
void save_dataset(const TrialDataset& dataset, const std::string& path);

}  // namespace trialpower
