#include <sys/wait.h>
#include <unistd.h>

int archive(const char *name) {
    pid_t pid = fork();
    if (pid == 0) {
        execlp("tar", "tar", "czf", "/tmp/out.tgz", "--", name, (char *)NULL);
        _exit(127);
    }
    int status = 0;
    waitpid(pid, &status, 0);
    return status;
}
