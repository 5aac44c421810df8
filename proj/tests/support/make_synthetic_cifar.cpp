#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "test_support.hpp"

// usage: make_synthetic_cifar <out_dir> [records_per_file] [seed]
// A stamp file records the parameters; a matching existing set is reused.
int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: " << argv[0] << " <out_dir> [records_per_file] [seed]\n";
    return 1;
  }
  const std::filesystem::path dir = argv[1];
  const std::size_t records = argc > 2 ? std::stoul(argv[2]) : asucnn::cifar::kRecordsPerFile;
  const std::uint64_t seed = argc > 3 ? std::stoull(argv[3]) : 2024;
  const std::string stamp = std::to_string(records) + " " + std::to_string(seed);

  if (asucnn::cifar::dataset_present(dir) && asucnn::testing::read_file_text(dir / "stamp.txt") == stamp) {
    std::cout << "synthetic set already present in " << dir.string() << "\n";
    return 0;
  }
  asucnn::testing::write_synthetic_cifar(dir, records, seed);
  std::ofstream(dir / "stamp.txt") << stamp;
  std::cout << "wrote " << 6 * records << " synthetic records to " << dir.string() << "\n";
  return 0;
}
