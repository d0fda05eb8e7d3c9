// Writes the procedural tubular-joint mesh used as the CAD model.
#include <iostream>

#include "weldplan/mesh_io.hpp"
#include "weldplan/workcell.hpp"

int main(int argc, char** argv)
{
    if (argc != 2) {
        std::cerr << "usage: make_tky_mesh <out.ply>\n";
        return 1;
    }
    try {
        weldplan::write_ply_mesh(argv[1], weldplan::make_tubular_joint_mesh());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
