#include <stdio.h>
#include <string.h>

#include "orbitfl.h"

static const char *SCENARIO =
    "[sim]\nseed = 3\nmax_epochs = 2\n\n"
    "[data]\nsamples_per_satellite = 20\ntest_samples = 200\n";

int main(int argc, char **argv) {
    OrbitflScenario *s = NULL;
    OrbitflRun *r = NULL;
    OrbitflRecord rec;

    if (orbitfl_scenario_from_toml("[constellation]\nplanes = 0\n[sim]\nseed = 1\n", &s) != ORBITFL_STATUS_CONFIG_ERROR || s != NULL)
        return 10;
    if (strstr(orbitfl_last_error_message(), "constellation.planes") == NULL)
        return 11;
    if (orbitfl_scenario_from_toml(SCENARIO, &s) != ORBITFL_STATUS_OK)
        return 12;
    if (orbitfl_run(s, &r) != ORBITFL_STATUS_OK)
        return 13;
    if (orbitfl_run_record_count(r) != 2)
        return 14;
    if (orbitfl_run_record(r, 1, &rec) != ORBITFL_STATUS_OK || rec.epoch != 2 || rec.ps_up_msgs != 10)
        return 15;
    if (orbitfl_run_record(r, 2, &rec) != ORBITFL_STATUS_OUT_OF_RANGE)
        return 16;
    if (argc > 1 && orbitfl_run_write_csv(r, argv[1]) != ORBITFL_STATUS_OK)
        return 17;
    printf("%s %.3f\n", orbitfl_version(), rec.test_accuracy);
    orbitfl_run_free(r);
    orbitfl_scenario_free(s);
    return 0;
}
