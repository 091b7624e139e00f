#include "app.hpp"

int main(int argc, char** argv) { return metabandit::cli::run_app(argc, argv); }
