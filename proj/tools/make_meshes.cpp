// Writes the ECT fine and coarse meshes shipped under data/meshes.
//
//   rrmh_make_meshes <output-dir>

#include "rrmh/models/mesh.hpp"

#include <filesystem>
#include <iostream>

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: rrmh_make_meshes <output-dir>\n";
    return 2;
  }
  const std::filesystem::path dir(argv[1]);
  std::filesystem::create_directories(dir);
  using rrmh::models::DiskMeshOptions;
  const auto fine = rrmh::models::generate_disk_mesh(DiskMeshOptions{2, 6});
  const auto coarse = rrmh::models::generate_disk_mesh(DiskMeshOptions{1, 3});
  rrmh::models::write_mesh(fine, (dir / "ect_fine.mesh").string());
  rrmh::models::write_mesh(coarse, (dir / "ect_coarse.mesh").string());
  std::cout << "fine: " << fine.num_nodes() << " nodes, " << fine.num_elements() << " elements\n"
            << "coarse: " << coarse.num_nodes() << " nodes, " << coarse.num_elements() << " elements\n";
  return 0;
}
