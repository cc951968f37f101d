#include <stdio.h>
#include <string.h>

static void printLine(const char *line) {
    printf("%s\n", line);
}

int main(void) {
    int i;
    char *data;
    char dataBuffer[32];
    char source[32];
    memset(dataBuffer, 'A', 32-1);
    dataBuffer[32-1] = '\0';
    data = dataBuffer;
    memset(source, 'C', 32-1);
    source[32-1] = '\0';
    memmove(data, source, 32*sizeof(char));
    data[32-1] = '\0';
    printLine(data);
    return 0;
}
