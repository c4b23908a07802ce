#include <vector>

#include "topicident/cli.hpp"

int main(int argc, char** argv) {
  return topicident::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
